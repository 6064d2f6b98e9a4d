#include "sonicforge/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sonicforge {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

Fft::Fft(std::size_t n) : n_(n) {
  if (n < 2) throw std::invalid_argument("Fft size must be >= 2");
  std::vector<double> real(n);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  auto* c = reinterpret_cast<fftw_complex*>(spec.data());
  // FFTW_UNALIGNED lets execute() run on arbitrary caller buffers, and
  // FFTW_ESTIMATE keeps plan selection free of timing measurements.
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real.data(), c, flags);
  inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), c, real.data(),
                                       flags | FFTW_DESTROY_INPUT);
}

Fft::~Fft() {
  if (forward_plan_ == nullptr && inverse_plan_ == nullptr) return;
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

Fft::Fft(Fft&& other) noexcept
    : n_(other.n_),
      forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      inverse_plan_(std::exchange(other.inverse_plan_, nullptr)) {}

Fft& Fft::operator=(Fft&& other) noexcept {
  if (this != &other) {
    std::swap(n_, other.n_);
    std::swap(forward_plan_, other.forward_plan_);
    std::swap(inverse_plan_, other.inverse_plan_);
  }
  return *this;
}

void Fft::forward(std::span<const double> in,
                  std::span<std::complex<double>> out) const {
  if (in.size() != n_ || out.size() != bins()) {
    throw std::invalid_argument("Fft::forward size mismatch");
  }
  // Out-of-place r2c leaves its input untouched.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_),
                       const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void Fft::inverse(std::span<const std::complex<double>> in,
                  std::span<double> out) const {
  if (in.size() != bins() || out.size() != n_) {
    throw std::invalid_argument("Fft::inverse size mismatch");
  }
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n_);
  for (double& v : out) v *= scale;
}

}  // namespace sonicforge
