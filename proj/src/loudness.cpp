#include "sonicforge/loudness.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "sonicforge/audio_ops.hpp"
#include "sonicforge/errors.hpp"
#include "sonicforge/kernels.hpp"

namespace sonicforge {
namespace {

std::vector<double> run_biquad(const Biquad& f, std::span<const double> x) {
  std::vector<double> y(x.size());
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double v = f.b[0] * x[n] + f.b[1] * x1 + f.b[2] * x2 - f.a[0] * y1 - f.a[1] * y2;
    x2 = x1;
    x1 = x[n];
    y2 = y1;
    y1 = v;
    y[n] = v;
  }
  return y;
}

double to_lufs(double power) { return -0.691 + 10.0 * std::log10(power); }

}  // namespace

KWeighting k_weighting_derived(int sample_rate) {
  const double rate = sample_rate;
  KWeighting k;
  {
    const double f0 = 1681.974450955533;
    const double gain_db = 3.999843853973347;
    const double q = 0.7071752369554196;
    const double kk = std::tan(std::numbers::pi * f0 / rate);
    const double vh = std::pow(10.0, gain_db / 20.0);
    const double vb = std::pow(vh, 0.4996667741545416);
    const double a0 = 1.0 + kk / q + kk * kk;
    k.shelf.b = {(vh + vb * kk / q + kk * kk) / a0, 2.0 * (kk * kk - vh) / a0,
                 (vh - vb * kk / q + kk * kk) / a0};
    k.shelf.a = {2.0 * (kk * kk - 1.0) / a0, (1.0 - kk / q + kk * kk) / a0};
  }
  {
    const double f0 = 38.13547087602444;
    const double q = 0.5003270373238773;
    const double kk = std::tan(std::numbers::pi * f0 / rate);
    const double a0 = 1.0 + kk / q + kk * kk;
    k.highpass.b = {1.0, -2.0, 1.0};
    k.highpass.a = {2.0 * (kk * kk - 1.0) / a0, (1.0 - kk / q + kk * kk) / a0};
  }
  return k;
}

KWeighting k_weighting(int sample_rate) {
  if (sample_rate == 48000) {
    KWeighting k;
    k.shelf.b = {1.53512485958697, -2.69169618940638, 1.19839281085285};
    k.shelf.a = {-1.69065929318241, 0.73248077421585};
    k.highpass.b = {1.0, -2.0, 1.0};
    k.highpass.a = {-1.99004745483398, 0.99007225036621};
    return k;
  }
  return k_weighting_derived(sample_rate);
}

LoudnessMeasure measure_integrated_lufs(const Waveform& input) {
  if (input.empty()) throw ArgumentError("cannot measure an empty waveform");
  const Waveform w = (input.sample_rate() == 44100 || input.sample_rate() == 48000)
                         ? input
                         : resample(input, kReferenceRate);
  const KWeighting kw = k_weighting(w.sample_rate());
  const auto block = static_cast<std::size_t>(std::llround(0.4 * w.sample_rate()));
  const auto step = static_cast<std::size_t>(std::llround(0.1 * w.sample_rate()));

  // Channel weights are 1.0 for both L and R.
  std::vector<double> power;
  for (int c = 0; c < w.channels(); ++c) {
    const auto ch = w.channel(c);
    std::vector<double> x(ch.begin(), ch.end());
    const auto y = run_biquad(kw.highpass, run_biquad(kw.shelf, x));
    const auto z = kernels::parallel::block_mean_square(y, block, step);
    if (power.empty()) {
      power = z;
    } else {
      for (std::size_t j = 0; j < z.size(); ++j) power[j] += z[j];
    }
  }

  double abs_sum = 0.0;
  std::size_t abs_count = 0;
  for (double p : power) {
    if (p > 0.0 && to_lufs(p) > kAbsoluteGateLufs) {
      abs_sum += p;
      ++abs_count;
    }
  }
  if (abs_count == 0) throw BelowGateError("all blocks fall below the absolute gate");
  const double relative_gate = to_lufs(abs_sum / abs_count) + kRelativeGateLu;

  double sum = 0.0;
  std::size_t count = 0;
  for (double p : power) {
    if (p <= 0.0) continue;
    const double l = to_lufs(p);
    if (l > kAbsoluteGateLufs && l > relative_gate) {
      sum += p;
      ++count;
    }
  }
  return LoudnessMeasure{to_lufs(sum / count), count};
}

LoudnessGain gain_to_target(const Waveform& w, double target_lufs) {
  const double measured = measure_integrated_lufs(w).integrated_lufs;
  const double gain = target_lufs - measured;
  auto g = apply_gain(w, gain);
  return LoudnessGain{std::move(g.waveform), gain, g.clipped_samples};
}

double loudness_delta(const Waveform& a, const Waveform& b) {
  return measure_integrated_lufs(a).integrated_lufs -
         measure_integrated_lufs(b).integrated_lufs;
}

}  // namespace sonicforge
