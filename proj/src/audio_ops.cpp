#include "sonicforge/audio_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "sonicforge/errors.hpp"
#include "sonicforge/kernels.hpp"

namespace sonicforge {
namespace {

constexpr int kTapsPerBranch = 64;

std::size_t seconds_to_frames(double seconds, int rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

}  // namespace

std::size_t ClipGeometry::recognition_frames() const {
  return seconds_to_frames(recognition_len_s, sample_rate);
}

std::size_t ClipGeometry::gap_frames() const {
  return seconds_to_frames(gap_len_s, sample_rate);
}

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw ArgumentError("target rate must be positive");
  if (w.sample_rate() == target_rate) return w;
  const auto in_rate = static_cast<std::uint64_t>(w.sample_rate());
  const auto out_rate = static_cast<std::uint64_t>(target_rate);
  const std::uint64_t g = std::gcd(in_rate, out_rate);
  kernels::ResampleMap map;
  map.num = in_rate / g;
  map.den = out_rate / g;
  map.cutoff = std::min(1.0, static_cast<double>(out_rate) / static_cast<double>(in_rate));
  const kernels::SincTable kernel(map.cutoff, kTapsPerBranch);
  const std::size_t out_frames = static_cast<std::size_t>(
      (static_cast<std::uint64_t>(w.frames()) * out_rate + in_rate / 2) / in_rate);
  std::vector<std::vector<float>> out;
  for (int c = 0; c < w.channels(); ++c) {
    out.push_back(kernels::parallel::resample(w.channel(c), map, kernel, out_frames));
  }
  return Waveform(target_rate, std::move(out));
}

Waveform resample_by_step(const Waveform& w, double step, std::size_t out_frames) {
  if (!(step > 0.0)) throw ArgumentError("resample step must be positive");
  kernels::ResampleMap map;
  map.step = step;
  map.cutoff = std::min(1.0, 1.0 / step);
  const kernels::SincTable kernel(map.cutoff, kTapsPerBranch);
  std::vector<std::vector<float>> out;
  for (int c = 0; c < w.channels(); ++c) {
    out.push_back(kernels::parallel::resample(w.channel(c), map, kernel, out_frames));
  }
  return Waveform(w.sample_rate(), std::move(out));
}

void fade_out_tail(Waveform& w, std::size_t fade_frames) {
  const std::size_t n = w.frames();
  fade_frames = std::min(fade_frames, n);
  for (int c = 0; c < w.channels(); ++c) {
    auto ch = w.channel(c);
    for (std::size_t i = 0; i < fade_frames; ++i) {
      // Gain runs from just below 1 down to 0 on the final sample.
      const double t = static_cast<double>(i + 1) / static_cast<double>(fade_frames);
      const double g = 0.5 + 0.5 * std::cos(std::numbers::pi * t);
      ch[n - fade_frames + i] = static_cast<float>(ch[n - fade_frames + i] * g);
    }
  }
}

Waveform fit_to_reference(const Waveform& w, const ClipGeometry& geometry) {
  if (w.empty()) throw ArgumentError("cannot fit an empty waveform");
  Waveform r = resample(w, geometry.sample_rate);
  const std::size_t target = geometry.recognition_frames();
  if (r.frames() == target) return r;
  std::vector<std::vector<float>> chans = r.planar();
  const bool trimmed = r.frames() > target;
  for (auto& ch : chans) ch.resize(target, 0.0f);
  Waveform out(geometry.sample_rate, std::move(chans));
  if (trimmed) fade_out_tail(out, seconds_to_frames(kCutFadeS, geometry.sample_rate));
  return out;
}

bool outside_input_contract(const Waveform& w) {
  const double d = w.duration_s();
  return d < 0.5 || d > 5.0;
}

Waveform concat_with_gap(const Waveform& a, const Waveform& b,
                         const ClipGeometry& geometry) {
  if (a.sample_rate() != b.sample_rate() || a.sample_rate() != geometry.sample_rate) {
    throw ArgumentError("comparison clips must share the geometry sample rate (" +
                        std::to_string(a.sample_rate()) + " vs " +
                        std::to_string(b.sample_rate()) + ")");
  }
  if (a.channels() != b.channels()) {
    throw ArgumentError("comparison clips must share a channel count");
  }
  const std::size_t clip = geometry.recognition_frames();
  if (a.frames() != clip || b.frames() != clip) {
    throw ArgumentError("comparison clips must each be exactly " +
                        std::to_string(clip) + " frames");
  }
  const std::size_t gap = geometry.gap_frames();
  std::vector<std::vector<float>> out;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<float> ch;
    ch.reserve(2 * clip + gap);
    ch.insert(ch.end(), a.channel(c).begin(), a.channel(c).end());
    ch.insert(ch.end(), gap, 0.0f);
    ch.insert(ch.end(), b.channel(c).begin(), b.channel(c).end());
    out.push_back(std::move(ch));
  }
  return Waveform(a.sample_rate(), std::move(out));
}

GainResult apply_gain(const Waveform& w, double gain_db) {
  GainResult r{w, 0};
  if (gain_db == 0.0) return r;
  const double g = std::pow(10.0, gain_db / 20.0);
  for (int c = 0; c < r.waveform.channels(); ++c) {
    for (float& v : r.waveform.channel(c)) {
      double s = static_cast<double>(v) * g;
      if (s > 1.0) {
        s = 1.0;
        ++r.clipped_samples;
      } else if (s < -1.0) {
        s = -1.0;
        ++r.clipped_samples;
      }
      v = static_cast<float>(s);
    }
  }
  return r;
}

}  // namespace sonicforge
