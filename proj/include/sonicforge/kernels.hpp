#pragma once

// Data-parallel inner loops. Every kernel exists twice: `serial` is the
// reference kept for testing, `parallel` is the OpenMP version used in
// production. Each output element is computed by exactly the same arithmetic
// in both, so the two agree bit-for-bit regardless of thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sonicforge::kernels {

/// Magnitude STFT, frames stored row-major. Frame i covers samples
/// [i*hop, i*hop + frame); samples past the end read as zero. The number of
/// frames is ceil(len / hop) so the whole signal is covered.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<float> magnitude;

  std::span<const float> frame(std::size_t i) const {
    return std::span<const float>(magnitude).subspan(i * bins, bins);
  }
};

std::vector<double> hann_window(std::size_t n);  // periodic

/// Input position of output sample m: either exact rational m*num/den or a
/// real step m*step.
struct ResampleMap {
  std::uint64_t num = 1;
  std::uint64_t den = 1;
  double step = 0.0;  // used when > 0
  double cutoff = 1.0;  // relative to the input Nyquist
};

/// Windowed-sinc interpolation table shared by both resample variants.
class SincTable {
 public:
  SincTable(double cutoff, int taps_per_branch);
  /// Half-width of the kernel in input samples.
  int half_width() const noexcept { return half_; }
  double operator()(double offset) const;  // offset in input samples

 private:
  static constexpr int kPhases = 512;
  double cutoff_;
  int half_;
  std::vector<double> table_;
};

namespace serial {
Spectrogram stft_magnitude(std::span<const float> x, std::size_t frame,
                           std::size_t hop);
std::vector<double> block_mean_square(std::span<const double> y,
                                      std::size_t block, std::size_t step);
/// Full linear convolution (x.size() + h.size() - 1) by FFT overlap-add.
std::vector<float> convolve(std::span<const float> x, std::span<const float> h);
std::vector<float> resample(std::span<const float> x, const ResampleMap& map,
                            const SincTable& kernel, std::size_t out_frames);
}  // namespace serial

namespace parallel {
Spectrogram stft_magnitude(std::span<const float> x, std::size_t frame,
                           std::size_t hop);
std::vector<double> block_mean_square(std::span<const double> y,
                                      std::size_t block, std::size_t step);
std::vector<float> convolve(std::span<const float> x, std::span<const float> h);
std::vector<float> resample(std::span<const float> x, const ResampleMap& map,
                            const SincTable& kernel, std::size_t out_frames);
}  // namespace parallel

/// O(N*M) time-domain convolution; an independent oracle for tests.
std::vector<double> convolve_direct(std::span<const float> x,
                                    std::span<const float> h);

/// Threads the parallel kernels may use (1 when built without OpenMP).
int max_threads();

}  // namespace sonicforge::kernels
