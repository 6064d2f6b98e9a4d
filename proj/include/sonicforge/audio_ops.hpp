#pragma once

#include <cstddef>

#include "sonicforge/waveform.hpp"

namespace sonicforge {

inline constexpr int kReferenceRate = 48000;

/// Clip layout for recognition (one clip) and comparison (two clips joined
/// by silence) items.
struct ClipGeometry {
  int sample_rate = kReferenceRate;
  double recognition_len_s = 4.0;
  double gap_len_s = 0.5;

  double comparison_len_s() const { return 2.0 * recognition_len_s + gap_len_s; }
  std::size_t recognition_frames() const;
  std::size_t gap_frames() const;
  std::size_t comparison_frames() const {
    return 2 * recognition_frames() + gap_frames();
  }
};

/// Windowed-sinc resampler (64 taps per branch, Kaiser window). Returns the
/// input unchanged when the rate already matches.
Waveform resample(const Waveform& w, int target_rate);

/// Resample by an arbitrary real step: output sample m reads input position
/// m * step. Used by pitch shifting, where the rate ratio is irrational.
Waveform resample_by_step(const Waveform& w, double step, std::size_t out_frames);

/// Raised-cosine fade lengths used at cut points.
inline constexpr double kCutFadeS = 0.005;

/// Resample to the geometry rate, then tail-trim or tail-pad to exactly the
/// recognition length. A 5 ms raised-cosine fade-out is applied only when
/// audio is trimmed. Throws ArgumentError on empty input.
Waveform fit_to_reference(const Waveform& w, const ClipGeometry& geometry = {});

/// True when a clip's duration lies outside the accepted [0.5, 5.0] s input
/// range. fit_to_reference still accepts such clips.
bool outside_input_contract(const Waveform& w);

/// a, silence, b. Both inputs must already be exactly recognition length at
/// the geometry rate with matching channel counts.
Waveform concat_with_gap(const Waveform& a, const Waveform& b,
                         const ClipGeometry& geometry = {});

struct GainResult {
  Waveform waveform;
  std::size_t clipped_samples = 0;
};

/// Multiply by 10^(gain_db/20), clamping to [-1, 1] and counting clamps.
GainResult apply_gain(const Waveform& w, double gain_db);

/// Fade the last `fade_frames` samples of every channel with a raised cosine.
void fade_out_tail(Waveform& w, std::size_t fade_frames);

}  // namespace sonicforge
