#include "sonicforge/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sonicforge/errors.hpp"

namespace sonicforge {

Waveform::Waveform(int sample_rate, int channels, std::size_t frames)
    : sample_rate_(sample_rate) {
  if (sample_rate <= 0) throw ArgumentError("sample rate must be positive");
  if (channels < 1 || channels > 2) {
    throw ArgumentError("channel count must be 1 or 2, got " + std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(channels), std::vector<float>(frames, 0.0f));
}

Waveform::Waveform(int sample_rate, std::vector<std::vector<float>> channels)
    : sample_rate_(sample_rate), data_(std::move(channels)) {
  if (sample_rate <= 0) throw ArgumentError("sample rate must be positive");
  if (data_.empty() || data_.size() > 2) {
    throw ArgumentError("channel count must be 1 or 2, got " +
                        std::to_string(data_.size()));
  }
  if (data_.size() == 2 && data_[0].size() != data_[1].size()) {
    throw ArgumentError("channels differ in length");
  }
}

Waveform Waveform::mono(int sample_rate, std::vector<float> samples) {
  std::vector<std::vector<float>> ch;
  ch.push_back(std::move(samples));
  return Waveform(sample_rate, std::move(ch));
}

std::vector<float> Waveform::mixdown() const {
  if (data_.size() == 1) return data_.front();
  std::vector<float> out(frames());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.5f * (data_[0][i] + data_[1][i]);
  }
  return out;
}

float Waveform::peak() const noexcept {
  float p = 0.0f;
  for (const auto& ch : data_) {
    for (float v : ch) p = std::max(p, std::abs(v));
  }
  return p;
}

}  // namespace sonicforge
