#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sonicforge/attribute.hpp"
#include "sonicforge/pool.hpp"
#include "sonicforge/waveform.hpp"

namespace sonicforge {

/// One attribute manipulation. `magnitude` is read per kind: semitones,
/// dB/octave tilt, LUFS target, strike scale, stretch ratio, BPM ratio,
/// azimuth degrees, far flag (0/1) or event count. `label` names the IR,
/// category or instrument for the kinds that select rather than scale.
struct TransformConfig {
  Attribute kind = Attribute::Pitch;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
  std::string label;

  friend bool operator==(const TransformConfig&, const TransformConfig&) = default;
};

/// Phase vocoder (STFT 2048, hop 512, identity phase locking) stretching by
/// 2^(st/12), then resampled back to the input length. |semitones| <= 24.
Waveform pitch_shift(const Waveform& w, double semitones);

/// WSOLA: 40 ms Hann windows at 50% overlap, each placed within +-10 ms of
/// its nominal position by normalized cross-correlation against the natural
/// continuation of the previous segment. Output length is round(N * ratio).
Waveform time_stretch(const Waveform& w, double ratio);

/// Zero-phase tilt of tilt_db dB per octave around 1 kHz (flat below
/// 50 Hz), loudness restored to the input's. |tilt| <= 12.
Waveform brightness_shape(const Waveform& w, double tilt_db_per_octave);

/// Softer excitation: attack segments scaled by s, the body by sqrt(s), and a
/// 2 kHz shelf whose high band is scaled by (1 + s) / 2. s in (0, 1].
Waveform velocity_scale(const Waveform& w, double strike_scale);

inline constexpr double kMaxIldDb = 6.0;
inline constexpr double kMaxItdS = 0.00066;
inline constexpr double kPinnaCutoffHz = 4000.0;

/// Mono to stereo. Positive azimuth places the source on the right.
Waveform render_direction(const Waveform& mono, double azimuth_deg);

enum class Sector { Front, Back, Neither };
/// Front within +-60 degrees, back within 60 degrees of 180.
Sector sector_of(double azimuth_deg);
/// Wraps to [-180, 180).
double wrap_azimuth(double deg);

inline constexpr double kFarDirectAttenuationDb = 12.0;
inline constexpr double kFarRolloffHz = 6000.0;
inline constexpr double kDirectWindowS = 0.0025;

/// IR actually convolved for a near or far render: far attenuates the
/// direct-path window and applies a one-pole roll-off.
ImpulseResponse distance_response(const ImpulseResponse& early, bool far);
/// Direct energy (window after the direct index) over the rest, in dB.
double direct_to_reverberant_db(const ImpulseResponse& ir);

/// Convolves with the bank's "early" response. ConfigError when missing.
Waveform render_distance(const Waveform& w, bool far, const IrBank& bank);

/// Full convolution truncated to the input length (10 ms fade when the cut
/// tail carries energy), loudness restored to the input's.
Waveform apply_reverb(const Waveform& w, const ImpulseResponse& ir);
/// "dry" for a unit impulse or a response labeled dry, else "reverberant".
std::string reverb_label(const ImpulseResponse& ir);

inline constexpr double kCountMinGapS = 0.150;
inline constexpr int kMaxCount = 6;

/// n copies of `event` at seeded onsets, each at least event length plus
/// the minimum gap after the previous one.
Waveform synthesize_count(const Waveform& event, int n, double total_len_s,
                          std::uint64_t seed);
/// Onset sample positions used by synthesize_count.
std::vector<std::size_t> count_placements(std::size_t event_frames, int n,
                                          std::size_t total_frames, int sample_rate,
                                          std::uint64_t seed);

struct Selection {
  const PoolClip* clip = nullptr;
  Waveform audio;
};

/// Seeded draw of a clip labeled texture=category, fit to the reference
/// geometry and normalized to target_lufs.
Selection texture_select(const ClipPool& pool, const std::string& category,
                         std::uint64_t seed, double target_lufs);

/// Seeded draw of a clip labeled instrument=name, shifted to pitch_norm
/// (MIDI) and normalized to target_lufs.
Selection timbre_select(const ClipPool& pool, const std::string& instrument,
                        double pitch_norm, std::uint64_t seed, double target_lufs);

/// MIDI pitch of a pool clip: its "midi" label when present, otherwise the
/// estimated f0. nullopt when neither is available.
std::optional<double> clip_midi(const PoolClip& clip);

}  // namespace sonicforge
