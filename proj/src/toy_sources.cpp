#include "sonicforge/toy_sources.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sonicforge/analysis.hpp"
#include "sonicforge/audio_ops.hpp"
#include "sonicforge/rng.hpp"

namespace sonicforge {
namespace {

constexpr int kRate = kReferenceRate;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t to_frames(double s) { return static_cast<std::size_t>(std::llround(s * kRate)); }

struct Voice {
  std::string name;
  std::vector<double> partials;  // amplitude of harmonic k+1
  double attack_s;
  double decay_tau_s;            // 0 for sustained
  bool percussive;
};

const std::vector<Voice>& voices() {
  static const std::vector<Voice> v = {
      {"flute", {1.0, 0.35, 0.12, 0.05}, 0.040, 0.0, false},
      {"clarinet", {1.0, 0.02, 0.55, 0.02, 0.35, 0.02, 0.2, 0.01, 0.1}, 0.025, 0.0, false},
      {"organ", {1.0, 0.7, 0.5, 0.4, 0.2, 0.15}, 0.010, 0.0, false},
      {"strings", {1.0, 0.5, 0.33, 0.25, 0.2, 0.17, 0.14, 0.12, 0.11, 0.1}, 0.080, 0.0, false},
      {"piano", {1.0, 0.45, 0.25, 0.15, 0.1, 0.06, 0.04}, 0.003, 1.6, true},
      {"marimba", {1.0, 0.0, 0.0, 0.3}, 0.002, 0.9, true},
  };
  return v;
}

void normalize_peak(std::vector<float>& x, double peak) {
  float m = 0.0f;
  for (float v : x) m = std::max(m, std::abs(v));
  if (m == 0.0f) return;
  const double g = peak / m;
  for (float& v : x) v = static_cast<float>(v * g);
}

/// Note with a linear attack, optional exponential decay (higher partials
/// decay faster) and a 20 ms release at the end of the active span.
std::vector<float> render_note(const Voice& voice, double midi, double lead_s,
                               double active_s, double total_s, Rng& rng) {
  const double f0 = midi_to_hz(midi);
  std::vector<float> x(to_frames(total_s), 0.0f);
  const std::size_t start = to_frames(lead_s);
  const std::size_t len = to_frames(active_s);
  const double release = 0.020;
  std::vector<double> phases(voice.partials.size());
  for (auto& p : phases) p = rng.uniform(0.0, kTwoPi);
  for (std::size_t i = 0; i < len && start + i < x.size(); ++i) {
    const double t = static_cast<double>(i) / kRate;
    double env = std::min(1.0, t / voice.attack_s);
    if (t > active_s - release) env *= std::max(0.0, (active_s - t) / release);
    double acc = 0.0;
    for (std::size_t k = 0; k < voice.partials.size(); ++k) {
      const double h = static_cast<double>(k + 1);
      if (voice.partials[k] == 0.0 || h * f0 > 0.45 * kRate) continue;
      double a = voice.partials[k];
      if (voice.decay_tau_s > 0.0) a *= std::exp(-t * std::sqrt(h) / voice.decay_tau_s);
      acc += a * std::sin(kTwoPi * h * f0 * t + phases[k]);
    }
    if (voice.percussive && t < 0.015) acc += 0.3 * (1.0 - t / 0.015) * rng.gaussian();
    x[start + i] = static_cast<float>(env * acc);
  }
  normalize_peak(x, 0.5);
  return x;
}

std::vector<float> one_pole(std::vector<float> x, double cutoff_hz) {
  const double c = 1.0 - std::exp(-kTwoPi * cutoff_hz / kRate);
  double s = 0.0;
  for (float& v : x) {
    s += c * (v - s);
    v = static_cast<float>(s);
  }
  return x;
}

std::vector<float> highpass(std::vector<float> x, double cutoff_hz) {
  const auto low = one_pole(x, cutoff_hz);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= low[i];
  return x;
}

std::vector<float> noise(std::size_t n, Rng& rng) {
  std::vector<float> x(n);
  for (float& v : x) v = static_cast<float>(rng.gaussian());
  return x;
}

/// Decaying burst added into `x` at `at`.
void add_burst(std::vector<float>& x, std::size_t at, double amp, double tau_s,
               double len_s, Rng& rng, double tone_hz = 0.0) {
  const std::size_t len = to_frames(len_s);
  for (std::size_t i = 0; i < len && at + i < x.size(); ++i) {
    const double t = static_cast<double>(i) / kRate;
    const double body = tone_hz > 0.0 ? std::sin(kTwoPi * tone_hz * t) : rng.gaussian();
    x[at + i] += static_cast<float>(amp * std::exp(-t / tau_s) * body);
  }
}

std::vector<float> make_event(const std::string& kind, Rng& rng) {
  if (kind == "click") {
    std::vector<float> x(to_frames(0.100), 0.0f);
    add_burst(x, 0, 1.0, 0.004, 0.100, rng);
    normalize_peak(x, 0.6);
    return x;
  }
  if (kind == "knock") {
    std::vector<float> x(to_frames(0.120), 0.0f);
    add_burst(x, 0, 1.0, 0.025, 0.120, rng, 180.0);
    add_burst(x, 0, 0.5, 0.003, 0.020, rng);
    normalize_peak(x, 0.6);
    return x;
  }
  if (kind == "clap") {
    std::vector<float> x(to_frames(0.080), 0.0f);
    add_burst(x, 0, 1.0, 0.012, 0.080, rng);
    x = highpass(std::move(x), 800.0);
    normalize_peak(x, 0.6);
    return x;
  }
  std::vector<float> x(to_frames(0.150), 0.0f);  // beep
  const std::size_t attack = to_frames(0.003);
  const std::size_t release = to_frames(0.040);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / kRate;
    double env = 1.0;
    if (i < attack) env = static_cast<double>(i) / attack;
    const std::size_t left = x.size() - i;
    if (left <= release) {
      env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(left) / release);
    }
    x[i] = static_cast<float>(0.5 * env * std::sin(kTwoPi * 1000.0 * t));
  }
  return x;
}

std::vector<float> make_texture(const std::string& kind, double total_s, Rng& rng) {
  const std::size_t n = to_frames(total_s);
  std::vector<float> x(n, 0.0f);
  if (kind == "rain") {
    auto bed = highpass(noise(n, rng), 2500.0);
    for (std::size_t i = 0; i < n; ++i) x[i] = 0.15f * bed[i];
    const auto drops = static_cast<std::size_t>(220.0 * total_s);
    for (std::size_t d = 0; d < drops; ++d) {
      add_burst(x, static_cast<std::size_t>(rng.below(n)), rng.uniform(0.2, 0.6), 0.0015,
                0.010, rng, rng.uniform(2500.0, 6000.0));
    }
  } else if (kind == "fire") {
    auto rumble = one_pole(one_pole(noise(n, rng), 300.0), 300.0);
    for (std::size_t i = 0; i < n; ++i) x[i] = 3.0f * rumble[i];
    const auto crackles = static_cast<std::size_t>(18.0 * total_s);
    for (std::size_t c = 0; c < crackles; ++c) {
      add_burst(x, static_cast<std::size_t>(rng.below(n)), rng.uniform(0.3, 1.0), 0.0008,
                0.006, rng);
    }
  } else if (kind == "crowd") {
    for (int v = 0; v < 14; ++v) {
      const double f0 = rng.uniform(95.0, 240.0);
      const double rate = rng.uniform(3.0, 6.0);
      const double ph = rng.uniform(0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / kRate;
        const double syl = std::max(0.0, std::sin(kTwoPi * rate * t + ph));
        const double jitter = 1.0 + 0.03 * std::sin(kTwoPi * 0.7 * t + ph);
        double s = 0.0;
        for (int h = 1; h <= 8; ++h) {
          s += std::sin(kTwoPi * h * f0 * jitter * t + h * ph) / h;
        }
        x[i] += static_cast<float>(0.1 * syl * s);
      }
    }
    auto murmur = one_pole(noise(n, rng), 1500.0);
    for (std::size_t i = 0; i < n; ++i) x[i] += 0.3f * murmur[i];
  } else {  // wind
    auto air = one_pole(one_pole(noise(n, rng), 600.0), 900.0);
    const double ph = rng.uniform(0.0, kTwoPi);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / kRate;
      const double gust = 0.6 + 0.4 * std::sin(kTwoPi * 0.3 * t + ph);
      x[i] = static_cast<float>(4.0 * gust * air[i]);
    }
  }
  normalize_peak(x, 0.5);
  return x;
}

/// One noise hit per beat with alternating accents.
std::vector<float> make_loop(double bpm, double total_s, Rng& rng) {
  std::vector<float> x(to_frames(total_s), 0.0f);
  const double beat = 60.0 / bpm;
  int k = 0;
  for (double t = 0.05; t < total_s - 0.1; t += beat, ++k) {
    const double amp = (k % 2 == 0) ? 1.0 : 0.75;
    add_burst(x, to_frames(t), amp, 0.018, 0.090, rng);
  }
  x = highpass(std::move(x), 300.0);
  normalize_peak(x, 0.6);
  return x;
}

std::string midi_label(int midi) { return std::to_string(midi); }

}  // namespace

std::vector<std::string> toy_instruments() {
  std::vector<std::string> out;
  for (const auto& v : voices()) out.push_back(v.name);
  return out;
}

std::vector<std::string> toy_textures() { return {"crowd", "fire", "rain", "wind"}; }

ClipPool make_toy_pool(std::uint64_t seed) {
  ClipPool pool;
  const std::vector<int> notes = {48, 53, 57, 60, 64, 67, 72, 76, 81};
  for (const auto& voice : voices()) {
    for (int midi : notes) {
      Rng rng(mix_seed(seed, hash_name(voice.name + "/" + midi_label(midi))));
      PoolClip clip;
      clip.id = "tonal-" + voice.name + "-" + midi_label(midi);
      clip.source = "synthetic";
      clip.labels = {{"role", "tonal"},
                     {"instrument", voice.name},
                     {"midi", midi_label(midi)},
                     {"envelope", voice.percussive ? "percussive" : "sustained"}};
      clip.audio = Waveform::mono(kRate, render_note(voice, midi, 0.1, 1.7, 2.1, rng));
      pool.add(std::move(clip));
    }
  }
  for (const std::string kind : {"beep", "clap", "click", "knock"}) {
    Rng rng(mix_seed(seed, hash_name("event/" + kind)));
    PoolClip clip;
    clip.id = "event-" + kind;
    clip.source = "synthetic";
    clip.labels = {{"role", "event"}, {"event", kind}};
    clip.audio = Waveform::mono(kRate, make_event(kind, rng));
    pool.add(std::move(clip));
  }
  for (const auto& kind : toy_textures()) {
    for (int variant = 0; variant < 2; ++variant) {
      Rng rng(mix_seed(seed, hash_name("texture/" + kind + std::to_string(variant))));
      PoolClip clip;
      clip.id = "texture-" + kind + "-" + std::to_string(variant);
      clip.source = "synthetic";
      clip.labels = {{"role", "texture"}, {"texture", kind}};
      clip.audio = Waveform::mono(kRate, make_texture(kind, 4.5, rng));
      pool.add(std::move(clip));
    }
  }
  for (int bpm : {70, 90, 100, 110, 120, 140}) {
    Rng rng(mix_seed(seed, hash_name("rhythm/" + std::to_string(bpm))));
    PoolClip clip;
    clip.id = "rhythm-" + std::to_string(bpm);
    clip.source = "synthetic";
    clip.labels = {{"role", "rhythm"}, {"bpm", std::to_string(bpm)}, {"kit", "toy"}};
    clip.audio = Waveform::mono(kRate, make_loop(bpm, 9.0, rng));
    pool.add(std::move(clip));
  }
  return pool;
}

IrBank make_toy_ir_bank(std::uint64_t seed) {
  IrBank bank;
  bank.add(ImpulseResponse(Waveform::mono(kRate, {1.0f}), "dry"));

  {
    Rng rng(mix_seed(seed, hash_name("ir/early")));
    std::vector<float> h(to_frames(0.050), 0.0f);
    h[0] = 1.0f;
    for (int r = 0; r < 10; ++r) {
      const double t = 0.005 + 0.004 * r + rng.uniform(0.0, 0.003);
      const double amp = 0.32 * std::exp(-t / 0.030) * (rng.coin() ? 1.0 : -1.0);
      h[to_frames(t)] += static_cast<float>(amp);
    }
    bank.add(ImpulseResponse(Waveform::mono(kRate, std::move(h)), "early"));
  }

  struct Room {
    const char* label;
    double rt60;
  };
  for (const Room room : {Room{"room-small", 0.4}, Room{"room-medium", 0.8}, Room{"room-large", 1.4}}) {
    Rng rng(mix_seed(seed, hash_name(std::string("ir/") + room.label)));
    std::vector<float> h(to_frames(room.rt60 * 1.1), 0.0f);
    h[0] = 1.0f;
    const std::size_t pre_delay = to_frames(0.004);
    const double decay = std::log(1000.0) / room.rt60;  // 60 dB amplitude over rt60
    for (std::size_t i = pre_delay; i < h.size(); ++i) {
      const double t = static_cast<double>(i) / kRate;
      h[i] = static_cast<float>(0.08 * std::exp(-decay * t) * rng.gaussian());
    }
    auto tail = one_pole(std::vector<float>(h.begin() + 1, h.end()), 5000.0);
    std::copy(tail.begin(), tail.end(), h.begin() + 1);
    bank.add(ImpulseResponse(Waveform::mono(kRate, std::move(h)), room.label));
  }
  return bank;
}

}  // namespace sonicforge
