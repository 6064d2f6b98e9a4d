#include "sonicforge/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "sonicforge/analysis.hpp"
#include "sonicforge/audio_ops.hpp"
#include "sonicforge/errors.hpp"
#include "sonicforge/fft.hpp"
#include "sonicforge/kernels.hpp"
#include "sonicforge/loudness.hpp"
#include "sonicforge/rng.hpp"

namespace sonicforge {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr std::size_t kPvFrame = 2048;
constexpr std::size_t kPvHop = 512;

double db_to_amp(double db) { return std::pow(10.0, db / 20.0); }

std::size_t frames_for(double seconds, int rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

float read_or_zero(std::span<const float> x, long long i) {
  return (i >= 0 && i < static_cast<long long>(x.size())) ? x[static_cast<std::size_t>(i)] : 0.0f;
}

std::optional<double> try_lufs(const Waveform& w) {
  try {
    return measure_integrated_lufs(w).integrated_lufs;
  } catch (const BelowGateError&) {
    return std::nullopt;
  }
}

/// Restores `reference_lufs` when it was measurable.
Waveform renormalize(const Waveform& w, std::optional<double> reference_lufs) {
  if (!reference_lufs) return w;
  if (!try_lufs(w)) return w;
  return gain_to_target(w, *reference_lufs).waveform;
}

void one_pole_lowpass(std::span<float> x, double cutoff_hz, int rate) {
  const double c = 1.0 - std::exp(-kTwoPi * cutoff_hz / rate);
  double state = 0.0;
  for (float& v : x) {
    state += c * (v - state);
    v = static_cast<float>(state);
  }
}

std::vector<float> pv_stretch(std::span<const float> x, double alpha) {
  const std::size_t n = x.size();
  const std::size_t out_len = static_cast<std::size_t>(std::llround(n * alpha));
  const std::size_t half = kPvFrame / 2;
  const std::size_t bins = kPvFrame / 2 + 1;
  const std::size_t frames = (out_len + kPvHop - 1) / kPvHop + 1;
  const double analysis_hop = static_cast<double>(kPvHop) / alpha;
  const auto window = kernels::hann_window(kPvFrame);
  const Fft fft(kPvFrame);

  std::vector<long long> centers(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    centers[k] = std::llround(static_cast<double>(k) * analysis_hop);
  }

  std::vector<double> mag(frames * bins), phase(frames * bins);
#pragma omp parallel
  {
    std::vector<double> buf(kPvFrame);
    std::vector<std::complex<double>> spec(bins);
#pragma omp for schedule(static)
    for (std::size_t k = 0; k < frames; ++k) {
      const long long start = centers[k] - static_cast<long long>(half);
      for (std::size_t i = 0; i < kPvFrame; ++i) {
        buf[i] = read_or_zero(x, start + static_cast<long long>(i)) * window[i];
      }
      fft.forward(buf, spec);
      for (std::size_t b = 0; b < bins; ++b) {
        mag[k * bins + b] = std::abs(spec[b]);
        phase[k * bins + b] = std::arg(spec[b]);
      }
    }
  }

  // Identity phase locking: peaks advance by their instantaneous frequency,
  // every other bin keeps its analysis offset from the peak that owns it.
  std::vector<double> out_phase(frames * bins);
  std::copy(phase.begin(), phase.begin() + static_cast<long>(bins), out_phase.begin());
  std::vector<std::size_t> peaks;
  for (std::size_t k = 1; k < frames; ++k) {
    const double* m = &mag[k * bins];
    const double* ph = &phase[k * bins];
    const double* prev_ph = &phase[(k - 1) * bins];
    const double* prev_out = &out_phase[(k - 1) * bins];
    double* out = &out_phase[k * bins];
    const double hop_a = static_cast<double>(centers[k] - centers[k - 1]);

    peaks.clear();
    for (std::size_t b = 1; b + 1 < bins; ++b) {
      if (m[b] > m[b - 1] && m[b] >= m[b + 1]) peaks.push_back(b);
    }
    auto advance = [&](std::size_t b) {
      const double omega = kTwoPi * static_cast<double>(b) / kPvFrame;
      const double dev = std::remainder(ph[b] - prev_ph[b] - omega * hop_a, kTwoPi);
      const double inst = hop_a > 0.0 ? omega + dev / hop_a : omega;
      return std::remainder(prev_out[b] + inst * static_cast<double>(kPvHop), kTwoPi);
    };
    if (peaks.empty()) {
      for (std::size_t b = 0; b < bins; ++b) out[b] = advance(b);
      continue;
    }
    for (std::size_t p : peaks) out[p] = advance(p);
    std::size_t owner = 0;
    for (std::size_t b = 0; b < bins; ++b) {
      while (owner + 1 < peaks.size() && 2 * b > peaks[owner] + peaks[owner + 1]) ++owner;
      const std::size_t p = peaks[owner];
      if (b != p) out[b] = out[p] + (ph[b] - ph[p]);
    }
  }

  std::vector<double> grains(frames * kPvFrame);
#pragma omp parallel
  {
    std::vector<std::complex<double>> spec(bins);
    std::vector<double> buf(kPvFrame);
#pragma omp for schedule(static)
    for (std::size_t k = 0; k < frames; ++k) {
      for (std::size_t b = 0; b < bins; ++b) {
        spec[b] = std::polar(mag[k * bins + b], out_phase[k * bins + b]);
      }
      fft.inverse(spec, buf);
      for (std::size_t i = 0; i < kPvFrame; ++i) grains[k * kPvFrame + i] = buf[i] * window[i];
    }
  }

  std::vector<double> acc(out_len, 0.0), wsum(out_len, 0.0);
  for (std::size_t k = 0; k < frames; ++k) {
    const long long start = static_cast<long long>(k * kPvHop) - static_cast<long long>(half);
    for (std::size_t i = 0; i < kPvFrame; ++i) {
      const long long t = start + static_cast<long long>(i);
      if (t < 0 || t >= static_cast<long long>(out_len)) continue;
      acc[static_cast<std::size_t>(t)] += grains[k * kPvFrame + i];
      wsum[static_cast<std::size_t>(t)] += window[i] * window[i];
    }
  }
  std::vector<float> y(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    y[i] = static_cast<float>(acc[i] / std::max(wsum[i], 1e-3));
  }
  return y;
}

/// Analysis start offsets (relative to nominal) chosen on the channel mix.
std::vector<long long> wsola_starts(std::span<const float> x, double ratio,
                                    std::size_t win, std::size_t hop, std::size_t tol,
                                    std::size_t frames) {
  const std::size_t region = win + 2 * tol;
  const Fft fft(next_pow2(region));
  const std::size_t bins = fft.bins();
  std::vector<double> tbuf(fft.size()), rbuf(fft.size()), corr(fft.size());
  std::vector<std::complex<double>> tspec(bins), rspec(bins);
  std::vector<double> prefix(region + 1);

  std::vector<long long> starts(frames);
  const long long half = static_cast<long long>(hop);
  starts[0] = -half;
  for (std::size_t k = 1; k < frames; ++k) {
    const long long nominal =
        std::llround(static_cast<double>(k * hop) / ratio) - half;
    const long long natural = starts[k - 1] + static_cast<long long>(hop);

    double template_energy = 0.0;
    std::fill(tbuf.begin(), tbuf.end(), 0.0);
    for (std::size_t i = 0; i < win; ++i) {
      tbuf[i] = read_or_zero(x, natural + static_cast<long long>(i));
      template_energy += tbuf[i] * tbuf[i];
    }
    if (template_energy < 1e-12) {
      starts[k] = nominal;
      continue;
    }
    const long long region_start = nominal - static_cast<long long>(tol);
    std::fill(rbuf.begin(), rbuf.end(), 0.0);
    prefix[0] = 0.0;
    for (std::size_t i = 0; i < region; ++i) {
      rbuf[i] = read_or_zero(x, region_start + static_cast<long long>(i));
      prefix[i + 1] = prefix[i] + rbuf[i] * rbuf[i];
    }
    fft.forward(tbuf, tspec);
    fft.forward(rbuf, rspec);
    for (std::size_t b = 0; b < bins; ++b) rspec[b] *= std::conj(tspec[b]);
    fft.inverse(rspec, corr);

    long long best = static_cast<long long>(tol);
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d <= 2 * tol; ++d) {
      const double energy = prefix[d + win] - prefix[d];
      const double score = corr[d] / std::sqrt(energy + 1e-12);
      const long long offset = static_cast<long long>(d) - static_cast<long long>(tol);
      if (score > best_score ||
          (score == best_score && std::llabs(offset) < std::llabs(best - static_cast<long long>(tol)))) {
        best_score = score;
        best = static_cast<long long>(d);
      }
    }
    starts[k] = region_start + best;
  }
  return starts;
}

/// Full convolution cut back to the input length; the cut point is faded
/// when the discarded tail carries energy.
std::vector<float> convolve_truncated(std::span<const float> x, std::span<const float> h,
                                      int rate) {
  auto y = kernels::parallel::convolve(x, h);
  const bool tail = std::any_of(y.begin() + static_cast<long>(x.size()), y.end(),
                                [](float v) { return v != 0.0f; });
  y.resize(x.size());
  if (tail) {
    const std::size_t fade = std::min(frames_for(0.010, rate), y.size());
    for (std::size_t i = 0; i < fade; ++i) {
      const double t = static_cast<double>(i + 1) / static_cast<double>(fade);
      y[y.size() - fade + i] *= static_cast<float>(0.5 + 0.5 * std::cos(std::numbers::pi * t));
    }
  }
  return y;
}

Waveform convolve_each(const Waveform& w, const ImpulseResponse& ir) {
  if (ir.is_unit_impulse()) return w;
  std::vector<std::vector<float>> out;
  for (int c = 0; c < w.channels(); ++c) {
    out.push_back(convolve_truncated(w.channel(c), ir.samples.channel(0), w.sample_rate()));
  }
  return Waveform(w.sample_rate(), std::move(out));
}

std::vector<float> fractional_delay(std::span<const float> x, double delay) {
  if (delay == 0.0) return {x.begin(), x.end()};
  static const kernels::SincTable kernel(1.0, 64);
  const int hw = kernel.half_width();
  std::vector<float> y(x.size());
#pragma omp parallel for schedule(static)
  for (std::size_t m = 0; m < x.size(); ++m) {
    const double pos = static_cast<double>(m) - delay;
    const long long base = static_cast<long long>(std::floor(pos));
    double acc = 0.0;
    for (long long j = base - hw + 1; j <= base + hw; ++j) {
      acc += read_or_zero(x, j) * kernel(pos - static_cast<double>(j));
    }
    y[m] = static_cast<float>(acc);
  }
  return y;
}

const PoolClip& seeded_draw(const std::vector<const PoolClip*>& candidates,
                            std::uint64_t seed) {
  Rng rng(seed);
  return *candidates[rng.below(candidates.size())];
}

}  // namespace

Waveform pitch_shift(const Waveform& w, double semitones) {
  if (!(std::abs(semitones) <= 24.0)) throw ArgumentError("pitch shift beyond 24 semitones");
  if (semitones == 0.0 || w.empty()) return w;
  const double alpha = std::exp2(semitones / 12.0);
  std::vector<std::vector<float>> stretched;
  for (int c = 0; c < w.channels(); ++c) stretched.push_back(pv_stretch(w.channel(c), alpha));
  return resample_by_step(Waveform(w.sample_rate(), std::move(stretched)), alpha, w.frames());
}

Waveform time_stretch(const Waveform& w, double ratio) {
  if (!(ratio >= 0.5 && ratio <= 2.0)) throw ArgumentError("stretch ratio outside [0.5, 2]");
  if (ratio == 1.0 || w.empty()) return w;
  const int rate = w.sample_rate();
  const std::size_t win = 2 * (frames_for(0.040, rate) / 2);
  const std::size_t hop = win / 2;
  const std::size_t tol = frames_for(0.010, rate);
  const std::size_t out_len = static_cast<std::size_t>(std::llround(w.frames() * ratio));
  const std::size_t frames = (out_len + hop - 1) / hop + 2;
  const auto mix = w.mixdown();
  const auto starts = wsola_starts(mix, ratio, win, hop, tol, frames);
  const auto window = kernels::hann_window(win);

  std::vector<std::vector<float>> out;
  for (int c = 0; c < w.channels(); ++c) {
    const auto x = w.channel(c);
    std::vector<double> acc(out_len, 0.0), wsum(out_len, 0.0);
    for (std::size_t k = 0; k < frames; ++k) {
      const long long out_start = static_cast<long long>(k * hop) - static_cast<long long>(hop);
      for (std::size_t i = 0; i < win; ++i) {
        const long long t = out_start + static_cast<long long>(i);
        if (t < 0 || t >= static_cast<long long>(out_len)) continue;
        acc[static_cast<std::size_t>(t)] +=
            window[i] * read_or_zero(x, starts[k] + static_cast<long long>(i));
        wsum[static_cast<std::size_t>(t)] += window[i];
      }
    }
    std::vector<float> y(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
      y[i] = static_cast<float>(acc[i] / std::max(wsum[i], 1e-6));
    }
    out.push_back(std::move(y));
  }
  return Waveform(rate, std::move(out));
}

Waveform brightness_shape(const Waveform& w, double tilt) {
  if (!(std::abs(tilt) <= 12.0)) throw ArgumentError("tilt beyond 12 dB/octave");
  if (tilt == 0.0 || w.empty()) return w;
  const int rate = w.sample_rate();
  const Fft fft(next_pow2(w.frames() + 16384));
  const std::size_t size = fft.size();
  std::vector<double> gain(fft.bins());
  for (std::size_t b = 0; b < gain.size(); ++b) {
    const double f = std::clamp(static_cast<double>(b) * rate / static_cast<double>(size),
                                50.0, rate / 2.0);
    gain[b] = db_to_amp(tilt * std::log2(f / 1000.0));
  }
  std::vector<double> buf(size);
  std::vector<std::complex<double>> spec(fft.bins());
  std::vector<std::vector<float>> out;
  for (int c = 0; c < w.channels(); ++c) {
    const auto x = w.channel(c);
    std::fill(buf.begin(), buf.end(), 0.0);
    std::copy(x.begin(), x.end(), buf.begin());
    fft.forward(buf, spec);
    for (std::size_t b = 0; b < spec.size(); ++b) spec[b] *= gain[b];
    fft.inverse(spec, buf);
    out.emplace_back(buf.begin(), buf.begin() + static_cast<long>(x.size()));
  }
  return renormalize(Waveform(rate, std::move(out)), try_lufs(w));
}

Waveform velocity_scale(const Waveform& w, double s) {
  if (!(s > 0.0 && s <= 1.0)) throw ArgumentError("strike scale outside (0, 1]");
  if (s == 1.0) return w;
  const auto onsets = count_onsets(w);
  if (onsets.count == 0) throw NoOnsetError("no detectable onset for velocity scaling");

  const int rate = w.sample_rate();
  const std::size_t n = w.frames();
  const double pre = 0.010, attack = 0.050, ramp = 0.010;
  std::vector<double> membership(n, 0.0);
  for (double t : onsets.times_s) {
    const double a0 = t - pre, a1 = t + attack;
    const long long lo = std::max(0LL, std::llround((a0 - ramp) * rate));
    const long long hi = std::min(static_cast<long long>(n), std::llround((a1 + ramp) * rate));
    for (long long i = lo; i < hi; ++i) {
      const double ti = static_cast<double>(i) / rate;
      double m = 1.0;
      if (ti < a0) m = 0.5 - 0.5 * std::cos(std::numbers::pi * (ti - (a0 - ramp)) / ramp);
      if (ti > a1) m = 0.5 + 0.5 * std::cos(std::numbers::pi * (ti - a1) / ramp);
      auto& slot = membership[static_cast<std::size_t>(i)];
      slot = std::max(slot, m);
    }
  }
  const double body = std::sqrt(s);
  const double shelf = 0.5 + 0.5 * s;
  const double c = 1.0 - std::exp(-kTwoPi * 2000.0 / rate);

  std::vector<std::vector<float>> out;
  for (int ch = 0; ch < w.channels(); ++ch) {
    const auto x = w.channel(ch);
    std::vector<float> y(n);
    double lp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lp += c * (x[i] - lp);
      const double g = body + (s - body) * membership[i];
      y[i] = static_cast<float>(g * (lp + shelf * (x[i] - lp)));
    }
    out.push_back(std::move(y));
  }
  return Waveform(rate, std::move(out));
}

double wrap_azimuth(double deg) {
  double a = std::fmod(deg + 180.0, 360.0);
  if (a < 0.0) a += 360.0;
  return a - 180.0;
}

Sector sector_of(double azimuth_deg) {
  const double a = std::abs(wrap_azimuth(azimuth_deg));
  if (a <= 60.0) return Sector::Front;
  if (a >= 120.0) return Sector::Back;
  return Sector::Neither;
}

Waveform render_direction(const Waveform& mono, double azimuth_deg) {
  if (mono.channels() != 1) throw ArgumentError("direction rendering needs a mono source");
  if (!(azimuth_deg >= -180.0 && azimuth_deg < 180.0)) {
    throw ArgumentError("azimuth outside [-180, 180)");
  }
  const int rate = mono.sample_rate();
  double lateral = std::sin(azimuth_deg * std::numbers::pi / 180.0);
  if (std::abs(azimuth_deg) == 180.0 || azimuth_deg == 0.0) lateral = 0.0;
  const double amount = std::abs(lateral);

  std::vector<float> src(mono.channel(0).begin(), mono.channel(0).end());
  if (std::abs(azimuth_deg) > 90.0) one_pole_lowpass(src, kPinnaCutoffHz, rate);

  const double ild = kMaxIldDb * amount;
  const double near_gain = db_to_amp(ild / 2.0);
  const double far_gain = db_to_amp(-ild / 2.0);
  std::vector<float> near_ear(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) near_ear[i] = static_cast<float>(src[i] * near_gain);
  std::vector<float> far_ear = fractional_delay(src, kMaxItdS * amount * rate);
  for (float& v : far_ear) v = static_cast<float>(v * far_gain);

  if (lateral >= 0.0) return Waveform(rate, {std::move(far_ear), std::move(near_ear)});
  return Waveform(rate, {std::move(near_ear), std::move(far_ear)});
}

ImpulseResponse distance_response(const ImpulseResponse& early, bool far) {
  if (!far) return early;
  Waveform ir = early.samples;
  auto x = ir.channel(0);
  const std::size_t window = frames_for(kDirectWindowS, ir.sample_rate());
  const double g = db_to_amp(-kFarDirectAttenuationDb);
  for (std::size_t i = early.direct_index; i < std::min(x.size(), early.direct_index + window); ++i) {
    x[i] = static_cast<float>(x[i] * g);
  }
  one_pole_lowpass(x, kFarRolloffHz, ir.sample_rate());
  return ImpulseResponse(std::move(ir), early.label + "-far");
}

double direct_to_reverberant_db(const ImpulseResponse& ir) {
  const auto x = ir.samples.channel(0);
  const std::size_t window = frames_for(kDirectWindowS, ir.samples.sample_rate());
  double direct = 0.0, rest = 0.0;
  for (std::size_t i = ir.direct_index; i < x.size(); ++i) {
    const double e = static_cast<double>(x[i]) * x[i];
    (i < ir.direct_index + window ? direct : rest) += e;
  }
  if (rest == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(direct / rest);
}

Waveform render_distance(const Waveform& w, bool far, const IrBank& bank) {
  if (!bank.contains("early")) throw ConfigError("distance rendering needs an 'early' IR");
  const ImpulseResponse ir = distance_response(bank.get("early"), far);
  return renormalize(convolve_each(w, ir), try_lufs(w));
}

Waveform apply_reverb(const Waveform& w, const ImpulseResponse& ir) {
  return renormalize(convolve_each(w, ir), try_lufs(w));
}

std::string reverb_label(const ImpulseResponse& ir) {
  if (ir.is_unit_impulse() || ir.label == "dry" || ir.label == "dry-reference") return "dry";
  return "reverberant";
}

std::vector<std::size_t> count_placements(std::size_t event_frames, int n,
                                          std::size_t total_frames, int sample_rate,
                                          std::uint64_t seed) {
  if (n < 1 || n > kMaxCount) throw ArgumentError("event count outside [1, 6]");
  if (event_frames == 0) throw ArgumentError("empty event");
  const std::size_t gap = frames_for(kCountMinGapS, sample_rate);
  const auto count = static_cast<std::size_t>(n);
  const std::size_t needed = count * event_frames + (count - 1) * gap;
  if (needed > total_frames) {
    throw PackingError(std::to_string(n) + " events of " + std::to_string(event_frames) +
                       " frames do not fit in " + std::to_string(total_frames));
  }
  const std::size_t slack = total_frames - needed;
  Rng rng(seed);
  std::vector<std::size_t> offsets(count);
  for (auto& o : offsets) o = static_cast<std::size_t>(rng.below(slack + 1));
  std::sort(offsets.begin(), offsets.end());
  for (std::size_t i = 0; i < count; ++i) offsets[i] += i * (event_frames + gap);
  return offsets;
}

Waveform synthesize_count(const Waveform& event, int n, double total_len_s,
                          std::uint64_t seed) {
  if (event.empty()) throw ArgumentError("empty event");
  const int rate = event.sample_rate();
  const std::size_t total = frames_for(total_len_s, rate);
  const auto onsets = count_placements(event.frames(), n, total, rate, seed);
  Waveform out(rate, event.channels(), total);
  for (int c = 0; c < event.channels(); ++c) {
    const auto src = event.channel(c);
    auto dst = out.channel(c);
    for (std::size_t at : onsets) std::copy(src.begin(), src.end(), dst.begin() + static_cast<long>(at));
  }
  return out;
}

std::optional<double> clip_midi(const PoolClip& clip) {
  if (auto m = clip.label("midi")) return std::stod(*m);
  if (auto f0 = estimate_f0(clip.audio)) return hz_to_midi(*f0);
  return std::nullopt;
}

Selection texture_select(const ClipPool& pool, const std::string& category,
                         std::uint64_t seed, double target_lufs) {
  const auto candidates = pool.with_label("texture", category);
  if (candidates.empty()) throw ConfigError("no texture clips labeled '" + category + "'");
  const PoolClip& clip = seeded_draw(candidates, seed);
  return {&clip, gain_to_target(fit_to_reference(clip.audio), target_lufs).waveform};
}

Selection timbre_select(const ClipPool& pool, const std::string& instrument,
                        double pitch_norm, std::uint64_t seed, double target_lufs) {
  const auto candidates = pool.with_label("instrument", instrument);
  if (candidates.empty()) throw ConfigError("no clips for instrument '" + instrument + "'");
  const PoolClip& clip = seeded_draw(candidates, seed);
  const auto midi = clip_midi(clip);
  if (!midi) throw ConfigError("clip '" + clip.id + "' has no measurable pitch");
  Waveform w = pitch_shift(fit_to_reference(clip.audio), pitch_norm - *midi);
  return {&clip, gain_to_target(w, target_lufs).waveform};
}

}  // namespace sonicforge
