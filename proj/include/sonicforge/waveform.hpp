#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sonicforge {

/// Planar sample buffer, one vector per channel (1 or 2), values nominally in
/// [-1, 1]. Constructed once and then treated as an immutable value.
class Waveform {
 public:
  Waveform() = default;
  /// Zero-filled buffer. Throws ArgumentError on rate <= 0 or channels not 1/2.
  Waveform(int sample_rate, int channels, std::size_t frames);
  /// Takes ownership of planar channel data; all channels must match in length.
  Waveform(int sample_rate, std::vector<std::vector<float>> channels);

  static Waveform mono(int sample_rate, std::vector<float> samples);

  int sample_rate() const noexcept { return sample_rate_; }
  int channels() const noexcept { return static_cast<int>(data_.size()); }
  std::size_t frames() const noexcept {
    return data_.empty() ? 0 : data_.front().size();
  }
  bool empty() const noexcept { return frames() == 0; }
  double duration_s() const noexcept {
    return sample_rate_ > 0 ? static_cast<double>(frames()) / sample_rate_ : 0.0;
  }

  std::span<const float> channel(int c) const { return data_.at(c); }
  std::span<float> channel(int c) { return data_.at(c); }
  const std::vector<std::vector<float>>& planar() const noexcept { return data_; }

  /// Channel average; returns a copy for mono input.
  std::vector<float> mixdown() const;
  float peak() const noexcept;

  friend bool operator==(const Waveform&, const Waveform&) = default;

 private:
  int sample_rate_ = 0;
  std::vector<std::vector<float>> data_;
};

}  // namespace sonicforge
