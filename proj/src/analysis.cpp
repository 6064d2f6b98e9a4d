#include "sonicforge/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "sonicforge/errors.hpp"
#include "sonicforge/fft.hpp"
#include "sonicforge/kernels.hpp"
#include "sonicforge/loudness.hpp"

namespace sonicforge {
namespace {

constexpr std::size_t kYinWindow = 2048;
constexpr std::size_t kYinHop = 1024;
constexpr std::size_t kCentroidFrame = 2048;
constexpr std::size_t kCentroidHop = 512;
constexpr std::size_t kOnsetFrame = 1024;
constexpr std::size_t kOnsetHop = 128;
constexpr std::size_t kMedianSpan = 16;  // frames either side
constexpr double kOnsetDelta = 0.08;     // of the peak flux
constexpr double kOnsetLambda = 1.5;

double db_to_amp(double db) { return std::pow(10.0, db / 20.0); }

double frame_rms(std::span<const float> x, std::size_t start, std::size_t len) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = start; i < start + len && i < x.size(); ++i, ++n) {
    s += static_cast<double>(x[i]) * x[i];
  }
  return n == 0 ? 0.0 : std::sqrt(s / static_cast<double>(len));
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

struct YinSetup {
  std::size_t tau_min;
  std::size_t tau_max;
  std::size_t span;  // samples read per frame
  Fft fft;
};

PitchFrame yin_frame(std::span<const float> x, std::size_t start, const YinSetup& s,
                     const AnalysisConfig& cfg, int rate) {
  const std::size_t w = kYinWindow;
  std::vector<double> a(s.fft.size(), 0.0), b(s.fft.size(), 0.0);
  for (std::size_t j = 0; j < s.span && start + j < x.size(); ++j) {
    b[j] = x[start + j];
    if (j < w) a[j] = x[start + j];
  }
  std::vector<std::complex<double>> fa(s.fft.bins()), fb(s.fft.bins());
  s.fft.forward(a, fa);
  s.fft.forward(b, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] = std::conj(fa[k]) * fb[k];
  std::vector<double> r(s.fft.size());
  s.fft.inverse(fa, r);

  // d(tau) = e(0) + e(tau) - 2 r(tau), with e(tau) the energy of b[tau, tau+w).
  std::vector<double> d(s.tau_max + 2, 0.0);
  double e0 = 0.0;
  for (std::size_t j = 0; j < w; ++j) e0 += b[j] * b[j];
  double et = e0;
  for (std::size_t tau = 1; tau < d.size(); ++tau) {
    et += b[tau + w - 1] * b[tau + w - 1] - b[tau - 1] * b[tau - 1];
    d[tau] = std::max(0.0, e0 + et - 2.0 * r[tau]);
  }
  std::vector<double> dn(d.size(), 1.0);
  double running = 0.0;
  for (std::size_t tau = 1; tau < d.size(); ++tau) {
    running += d[tau];
    dn[tau] = running > 0.0 ? d[tau] * static_cast<double>(tau) / running : 1.0;
  }

  std::size_t best = 0;
  for (std::size_t tau = s.tau_min; tau <= s.tau_max; ++tau) {
    if (dn[tau] < cfg.yin_threshold) {
      while (tau + 1 <= s.tau_max && dn[tau + 1] < dn[tau]) ++tau;
      best = tau;
      break;
    }
  }
  if (best == 0) {
    best = s.tau_min;
    for (std::size_t tau = s.tau_min; tau <= s.tau_max; ++tau) {
      if (dn[tau] < dn[best]) best = tau;
    }
  }
  double refined = static_cast<double>(best);
  if (best > 1 && best + 1 < dn.size()) {
    const double l = dn[best - 1], c = dn[best], rr = dn[best + 1];
    const double denom = l - 2.0 * c + rr;
    if (denom > 0.0) refined += 0.5 * (l - rr) / denom;
  }
  return PitchFrame{rate / refined, std::clamp(1.0 - dn[best], 0.0, 1.0)};
}

}  // namespace

double hz_to_midi(double hz) { return 69.0 + 12.0 * std::log2(hz / 440.0); }
double midi_to_hz(double midi) { return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0); }

std::vector<PitchFrame> pitch_track(const Waveform& w, const AnalysisConfig& cfg) {
  const auto x = w.mixdown();
  const int rate = w.sample_rate();
  const auto tau_min = static_cast<std::size_t>(std::floor(rate / cfg.f0_max_hz));
  const auto tau_max = static_cast<std::size_t>(std::ceil(rate / cfg.f0_min_hz));
  const std::size_t span = kYinWindow + tau_max + 1;
  YinSetup setup{std::max<std::size_t>(tau_min, 2), tau_max, span,
                 Fft(next_pow2(span + kYinWindow))};
  const double gate = db_to_amp(cfg.frame_gate_dbfs);
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + kYinWindow <= x.size(); s += kYinHop) {
    if (frame_rms(x, s, kYinWindow) > gate) starts.push_back(s);
  }
  std::vector<PitchFrame> frames(starts.size());
  const auto n = static_cast<std::int64_t>(starts.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    frames[static_cast<std::size_t>(i)] =
        yin_frame(x, starts[static_cast<std::size_t>(i)], setup, cfg, rate);
  }
  return frames;
}

std::optional<double> estimate_f0(const Waveform& w, const AnalysisConfig& cfg) {
  const auto frames = pitch_track(w, cfg);
  std::vector<double> voiced;
  for (const auto& f : frames) {
    if (f.confidence >= cfg.f0_confidence && f.f0_hz >= cfg.f0_min_hz &&
        f.f0_hz <= cfg.f0_max_hz) {
      voiced.push_back(f.f0_hz);
    }
  }
  if (voiced.empty() || 2 * voiced.size() < frames.size()) return std::nullopt;
  return median(std::move(voiced));
}

double spectral_centroid(const Waveform& w, const AnalysisConfig& cfg) {
  const auto x = w.mixdown();
  const auto spec = kernels::parallel::stft_magnitude(x, kCentroidFrame, kCentroidHop);
  const double gate = db_to_amp(cfg.frame_gate_dbfs);
  const double bin_hz = static_cast<double>(w.sample_rate()) / kCentroidFrame;
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < spec.frames; ++i) {
    if (frame_rms(x, i * kCentroidHop, kCentroidFrame) <= gate) continue;
    double num = 0.0, den = 0.0;
    const auto mag = spec.frame(i);
    for (std::size_t b = 0; b < mag.size(); ++b) {
      num += b * bin_hz * mag[b];
      den += mag[b];
    }
    if (den <= 0.0) continue;
    total += num / den;
    ++used;
  }
  if (used == 0) throw SilenceError("no frame above the centroid gate");
  return total / static_cast<double>(used);
}

std::vector<double> onset_strength(const Waveform& w) {
  const auto x = w.mixdown();
  const auto spec = kernels::parallel::stft_magnitude(x, kOnsetFrame, kOnsetHop);
  std::vector<double> flux(spec.frames, 0.0);
  for (std::size_t i = 0; i < spec.frames; ++i) {
    const auto cur = spec.frame(i);
    double f = 0.0;
    for (std::size_t b = 0; b < cur.size(); ++b) {
      const double prev = i > 0 ? spec.frame(i - 1)[b] : 0.0;
      f += std::max(0.0, static_cast<double>(cur[b]) - prev);
    }
    flux[i] = f;
  }
  return flux;
}

OnsetResult count_onsets(const Waveform& w, const AnalysisConfig& cfg) {
  OnsetResult out;
  if (w.empty()) return out;
  const auto flux = onset_strength(w);
  const double peak = flux.empty() ? 0.0 : *std::max_element(flux.begin(), flux.end());
  if (peak <= 1e-9) return out;
  const auto x = w.mixdown();
  const double gate = db_to_amp(cfg.frame_gate_dbfs);
  const double rate = w.sample_rate();
  const double merge_frames = cfg.onset_merge_s * rate / kOnsetHop;
  double last_kept = -1e300;
  for (std::size_t i = 0; i < flux.size(); ++i) {
    const std::size_t lo = i >= kMedianSpan ? i - kMedianSpan : 0;
    const std::size_t hi = std::min(flux.size(), i + kMedianSpan + 1);
    // Local maximum over a +/-3 frame neighbourhood; ties resolve to the first.
    bool is_peak = flux[i] > 0.0;
    for (std::size_t j = (i >= 3 ? i - 3 : 0); j < std::min(flux.size(), i + 4) && is_peak; ++j) {
      if (j < i && flux[j] >= flux[i]) is_peak = false;
      if (j > i && flux[j] > flux[i]) is_peak = false;
    }
    if (!is_peak) continue;
    const double threshold =
        kOnsetLambda * median(std::vector<double>(flux.begin() + static_cast<std::ptrdiff_t>(lo),
                                                  flux.begin() + static_cast<std::ptrdiff_t>(hi))) +
        kOnsetDelta * peak;
    if (flux[i] <= threshold) continue;
    if (frame_rms(x, i * kOnsetHop, kOnsetFrame) <= gate) continue;
    if (static_cast<double>(i) - last_kept < merge_frames) continue;
    last_kept = static_cast<double>(i);
    out.times_s.push_back((static_cast<double>(i * kOnsetHop) + kOnsetFrame / 2.0) / rate);
  }
  out.count = out.times_s.size();
  return out;
}

std::vector<ActiveSegment> active_segments(const Waveform& w, const AnalysisConfig& cfg) {
  const double thr = db_to_amp(cfg.activity_dbfs);
  const auto hang = static_cast<std::size_t>(std::llround(cfg.hangover_s * w.sample_rate()));
  std::vector<ActiveSegment> segs;
  for (std::size_t i = 0; i < w.frames(); ++i) {
    bool active = false;
    for (int c = 0; c < w.channels(); ++c) active = active || std::abs(w.channel(c)[i]) > thr;
    if (!active) continue;
    if (!segs.empty() && i - segs.back().end <= hang) {
      segs.back().end = i + 1;
    } else {
      segs.push_back({i, i + 1});
    }
  }
  return segs;
}

double active_duration(const Waveform& w, const AnalysisConfig& cfg) {
  const auto segs = active_segments(w, cfg);
  if (segs.empty()) return 0.0;
  return static_cast<double>(segs.back().end - segs.front().begin) / w.sample_rate();
}

std::optional<double> tempo_from_onsets(const std::vector<double>& t,
                                        const AnalysisConfig& cfg) {
  if (t.size() < 3) return std::nullopt;
  std::vector<double> ioi;
  for (std::size_t i = 1; i < t.size(); ++i) ioi.push_back(t[i] - t[i - 1]);
  const double mean = std::accumulate(ioi.begin(), ioi.end(), 0.0) / ioi.size();
  double var = 0.0;
  for (double v : ioi) var += (v - mean) * (v - mean);
  var /= ioi.size();
  if (mean <= 0.0 || std::sqrt(var) / mean > cfg.tempo_max_cv) return std::nullopt;
  return 60.0 / median(ioi);
}

std::optional<double> estimate_tempo(const Waveform& w, const AnalysisConfig& cfg) {
  return tempo_from_onsets(count_onsets(w, cfg).times_s, cfg);
}

AnalysisReport analyze(const Waveform& w, const AnalysisConfig& cfg) {
  AnalysisReport r;
  r.f0_hz = estimate_f0(w, cfg);
  try {
    r.centroid_hz = spectral_centroid(w, cfg);
  } catch (const SilenceError&) {
  }
  try {
    r.integrated_lufs = measure_integrated_lufs(w).integrated_lufs;
  } catch (const BelowGateError&) {
  }
  r.active_duration_s = active_duration(w, cfg);
  auto onsets = count_onsets(w, cfg);
  r.onset_count = onsets.count;
  r.onset_times_s = std::move(onsets.times_s);
  return r;
}

}  // namespace sonicforge
