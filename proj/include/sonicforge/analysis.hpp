#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sonicforge/waveform.hpp"

namespace sonicforge {

/// Engineering thresholds for the signal oracles. All of them can be
/// overridden from the run config.
struct AnalysisConfig {
  double yin_threshold = 0.15;
  double f0_confidence = 0.5;
  double f0_min_hz = 40.0;
  double f0_max_hz = 2000.0;
  double frame_gate_dbfs = -60.0;
  double activity_dbfs = -50.0;
  double hangover_s = 0.010;
  double onset_merge_s = 0.050;
  double tempo_max_cv = 0.25;
};

/// Difference-function pitch estimator with cumulative-mean normalization
/// and parabolic refinement, run per frame on the channel mix. Returns
/// nullopt when fewer than half of the active frames reach the confidence
/// floor.
std::optional<double> estimate_f0(const Waveform& w, const AnalysisConfig& cfg = {});

/// Per-frame result of the pitch estimator, exposed for tests.
struct PitchFrame {
  double f0_hz = 0.0;
  double confidence = 0.0;
};
std::vector<PitchFrame> pitch_track(const Waveform& w, const AnalysisConfig& cfg = {});

/// Mean over frames above the frame gate of the magnitude-weighted mean
/// frequency (STFT 2048/512, Hann). Throws SilenceError when no frame passes.
double spectral_centroid(const Waveform& w, const AnalysisConfig& cfg = {});

struct OnsetResult {
  std::size_t count = 0;
  std::vector<double> times_s;  // strictly increasing
};

/// Spectral-flux onsets with an adaptive median threshold; onsets closer
/// than the merge interval collapse into the earlier one.
OnsetResult count_onsets(const Waveform& w, const AnalysisConfig& cfg = {});
std::vector<double> onset_strength(const Waveform& w);

/// Seconds between the first and last sample above the activity threshold.
double active_duration(const Waveform& w, const AnalysisConfig& cfg = {});

struct ActiveSegment {
  std::size_t begin = 0;  // frame index, inclusive
  std::size_t end = 0;    // exclusive
};
/// Above-threshold runs, with gaps shorter than the hangover bridged.
std::vector<ActiveSegment> active_segments(const Waveform& w, const AnalysisConfig& cfg = {});

/// 60 / median inter-onset interval. nullopt with fewer than three onsets or
/// when the intervals' coefficient of variation exceeds the configured limit.
std::optional<double> estimate_tempo(const Waveform& w, const AnalysisConfig& cfg = {});
std::optional<double> tempo_from_onsets(const std::vector<double>& onset_times_s,
                                        const AnalysisConfig& cfg = {});

struct AnalysisReport {
  std::optional<double> f0_hz;
  std::optional<double> centroid_hz;           // nullopt for silent clips
  std::optional<double> integrated_lufs;       // nullopt below the gate
  double active_duration_s = 0.0;
  std::size_t onset_count = 0;
  std::vector<double> onset_times_s;
};

AnalysisReport analyze(const Waveform& w, const AnalysisConfig& cfg = {});

double hz_to_midi(double hz);
double midi_to_hz(double midi);

}  // namespace sonicforge
