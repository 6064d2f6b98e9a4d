#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace sonicforge {

/// Real-input FFT of fixed size backed by an FFTW plan. Plans are created
/// under a global lock; execution is thread-safe and may be called
/// concurrently from several threads on one instance.
class Fft {
 public:
  explicit Fft(std::size_t n);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&& other) noexcept;
  Fft& operator=(Fft&& other) noexcept;

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  /// in.size() == size(), out.size() == bins().
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Inverse including the 1/n scale, so inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  std::size_t n_ = 0;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

std::size_t next_pow2(std::size_t n);

}  // namespace sonicforge
