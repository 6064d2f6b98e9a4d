#pragma once

#include <array>
#include <cstddef>

#include "sonicforge/waveform.hpp"

namespace sonicforge {

/// Integrated loudness. Measurement of an input whose blocks all fall below
/// the absolute gate throws BelowGateError rather than producing -inf.
struct LoudnessMeasure {
  double integrated_lufs = 0.0;
  std::size_t gated_block_count = 0;

  friend bool operator==(const LoudnessMeasure&, const LoudnessMeasure&) = default;
};

struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 2> a{};  // a1, a2 (a0 normalized to 1)
};

struct KWeighting {
  Biquad shelf;
  Biquad highpass;
};

/// BS.1770 K-weighting. 48 kHz returns the published coefficients verbatim;
/// other rates use the bilinear-transform design matched to them.
KWeighting k_weighting(int sample_rate);
KWeighting k_weighting_derived(int sample_rate);

inline constexpr double kAbsoluteGateLufs = -70.0;
inline constexpr double kRelativeGateLu = -10.0;

/// BS.1770 / R128 gated integrated loudness (400 ms blocks, 75% overlap).
/// Rates other than 44.1 and 48 kHz are resampled to 48 kHz first.
LoudnessMeasure measure_integrated_lufs(const Waveform& w);

struct LoudnessGain {
  Waveform waveform;
  double applied_gain_db = 0.0;
  std::size_t clipped_samples = 0;
};

/// Single-pass correction: gain = target - measured, applied with clamping.
LoudnessGain gain_to_target(const Waveform& w, double target_lufs);

/// integrated(a) - integrated(b), in LU.
double loudness_delta(const Waveform& a, const Waveform& b);

}  // namespace sonicforge
