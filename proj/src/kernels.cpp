#include "sonicforge/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "sonicforge/fft.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sonicforge::kernels {

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

SincTable::SincTable(double cutoff, int taps_per_branch) : cutoff_(cutoff) {
  // Downsampling widens the kernel so each output branch still spans
  // `taps_per_branch` zero crossings of the lowered cutoff.
  half_ = static_cast<int>(std::ceil(taps_per_branch / (2.0 * cutoff)));
  constexpr double kBeta = 8.6;
  const double i0_beta = std::cyl_bessel_i(0.0, kBeta);
  const std::size_t n = static_cast<std::size_t>(half_) * kPhases + 2;
  table_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / kPhases;  // |offset|
    const double r = u / half_;
    if (r >= 1.0) {
      table_[i] = 0.0;
      continue;
    }
    const double arg = std::numbers::pi * cutoff * u;
    const double sinc = u == 0.0 ? 1.0 : std::sin(arg) / arg;
    const double win = std::cyl_bessel_i(0.0, kBeta * std::sqrt(1.0 - r * r)) / i0_beta;
    table_[i] = cutoff * sinc * win;
  }
}

double SincTable::operator()(double offset) const {
  const double u = std::abs(offset) * kPhases;
  const auto i = static_cast<std::size_t>(u);
  if (i + 1 >= table_.size()) return 0.0;
  const double frac = u - static_cast<double>(i);
  return table_[i] + (table_[i + 1] - table_[i]) * frac;
}

namespace {

std::size_t stft_frame_count(std::size_t len, std::size_t hop) {
  return (len + hop - 1) / hop;
}

void stft_frame(std::span<const float> x, std::size_t frame, std::size_t hop,
                const std::vector<double>& window, const Fft& fft,
                std::size_t index, std::span<float> out) {
  std::vector<double> buf(frame, 0.0);
  const std::size_t start = index * hop;
  for (std::size_t k = 0; k < frame && start + k < x.size(); ++k) {
    buf[k] = static_cast<double>(x[start + k]) * window[k];
  }
  std::vector<std::complex<double>> spec(fft.bins());
  fft.forward(buf, spec);
  for (std::size_t b = 0; b < spec.size(); ++b) {
    out[b] = static_cast<float>(std::abs(spec[b]));
  }
}

double block_value(std::span<const double> y, std::size_t block, std::size_t step,
                   std::size_t j) {
  double sum = 0.0;
  const std::size_t start = j * step;
  for (std::size_t k = 0; k < block; ++k) sum += y[start + k] * y[start + k];
  return sum / static_cast<double>(block);
}

std::size_t block_count(std::size_t len, std::size_t block, std::size_t step) {
  return len < block ? 0 : (len - block) / step + 1;
}

float resample_sample(std::span<const float> x, const ResampleMap& map,
                      const SincTable& kernel, std::size_t m) {
  std::int64_t base = 0;
  double frac = 0.0;
  if (map.step > 0.0) {
    const double pos = static_cast<double>(m) * map.step;
    base = static_cast<std::int64_t>(std::floor(pos));
    frac = pos - static_cast<double>(base);
  } else {
    const std::uint64_t p = static_cast<std::uint64_t>(m) * map.num;
    base = static_cast<std::int64_t>(p / map.den);
    frac = static_cast<double>(p % map.den) / static_cast<double>(map.den);
  }
  const int half = kernel.half_width();
  const auto n = static_cast<std::int64_t>(x.size());
  double acc = 0.0;
  for (std::int64_t k = base - half + 1; k <= base + half; ++k) {
    if (k < 0 || k >= n) continue;
    acc += static_cast<double>(x[static_cast<std::size_t>(k)]) *
           kernel(static_cast<double>(k - base) - frac);
  }
  return static_cast<float>(acc);
}

// Overlap-add convolution is split into two phases so both variants can
// share them: independent per-block spectra, then a per-sample sum that
// visits blocks in ascending order.
struct OlaPlan {
  std::size_t fft_size = 0;
  std::size_t block = 0;
  std::size_t blocks = 0;
  std::size_t out_len = 0;
};

OlaPlan make_ola_plan(std::size_t nx, std::size_t nh) {
  OlaPlan p;
  p.fft_size = std::max<std::size_t>(4096, next_pow2(2 * nh));
  p.block = p.fft_size - nh + 1;
  p.blocks = (nx + p.block - 1) / p.block;
  p.out_len = nx + nh - 1;
  return p;
}

std::vector<std::complex<double>> filter_spectrum(std::span<const float> h,
                                                  const Fft& fft) {
  std::vector<double> buf(fft.size(), 0.0);
  std::copy(h.begin(), h.end(), buf.begin());
  std::vector<std::complex<double>> spec(fft.bins());
  fft.forward(buf, spec);
  return spec;
}

void ola_block(std::span<const float> x, const OlaPlan& p, const Fft& fft,
               const std::vector<std::complex<double>>& hspec, std::size_t b,
               std::vector<double>& out) {
  std::vector<double> buf(p.fft_size, 0.0);
  const std::size_t start = b * p.block;
  const std::size_t end = std::min(x.size(), start + p.block);
  for (std::size_t i = start; i < end; ++i) buf[i - start] = x[i];
  std::vector<std::complex<double>> spec(fft.bins());
  fft.forward(buf, spec);
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= hspec[k];
  out.assign(p.fft_size, 0.0);
  fft.inverse(spec, out);
}

float ola_sum(const OlaPlan& p, const std::vector<std::vector<double>>& parts,
              std::size_t n) {
  double acc = 0.0;
  const std::size_t last = std::min(p.blocks - 1, n / p.block);
  const std::size_t first = n >= p.fft_size ? (n - p.fft_size) / p.block + 1 : 0;
  for (std::size_t b = first; b <= last; ++b) {
    const std::size_t off = n - b * p.block;
    if (off < p.fft_size) acc += parts[b][off];
  }
  return static_cast<float>(acc);
}

}  // namespace

namespace serial {

Spectrogram stft_magnitude(std::span<const float> x, std::size_t frame,
                           std::size_t hop) {
  Spectrogram s;
  s.frames = stft_frame_count(x.size(), hop);
  s.bins = frame / 2 + 1;
  s.magnitude.assign(s.frames * s.bins, 0.0f);
  const auto window = hann_window(frame);
  const Fft fft(frame);
  for (std::size_t i = 0; i < s.frames; ++i) {
    stft_frame(x, frame, hop, window, fft, i,
               std::span<float>(s.magnitude).subspan(i * s.bins, s.bins));
  }
  return s;
}

std::vector<double> block_mean_square(std::span<const double> y,
                                      std::size_t block, std::size_t step) {
  std::vector<double> z(block_count(y.size(), block, step));
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = block_value(y, block, step, j);
  return z;
}

std::vector<float> convolve(std::span<const float> x, std::span<const float> h) {
  if (x.empty() || h.empty()) return {};
  const OlaPlan p = make_ola_plan(x.size(), h.size());
  const Fft fft(p.fft_size);
  const auto hspec = filter_spectrum(h, fft);
  std::vector<std::vector<double>> parts(p.blocks);
  for (std::size_t b = 0; b < p.blocks; ++b) ola_block(x, p, fft, hspec, b, parts[b]);
  std::vector<float> out(p.out_len);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = ola_sum(p, parts, n);
  return out;
}

std::vector<float> resample(std::span<const float> x, const ResampleMap& map,
                            const SincTable& kernel, std::size_t out_frames) {
  std::vector<float> out(out_frames);
  for (std::size_t m = 0; m < out_frames; ++m) out[m] = resample_sample(x, map, kernel, m);
  return out;
}

}  // namespace serial

namespace parallel {

Spectrogram stft_magnitude(std::span<const float> x, std::size_t frame,
                           std::size_t hop) {
  Spectrogram s;
  s.frames = stft_frame_count(x.size(), hop);
  s.bins = frame / 2 + 1;
  s.magnitude.assign(s.frames * s.bins, 0.0f);
  const auto window = hann_window(frame);
  const Fft fft(frame);
  const auto frames = static_cast<std::int64_t>(s.frames);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < frames; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    stft_frame(x, frame, hop, window, fft, idx,
               std::span<float>(s.magnitude).subspan(idx * s.bins, s.bins));
  }
  return s;
}

std::vector<double> block_mean_square(std::span<const double> y,
                                      std::size_t block, std::size_t step) {
  std::vector<double> z(block_count(y.size(), block, step));
  const auto n = static_cast<std::int64_t>(z.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < n; ++j) {
    z[static_cast<std::size_t>(j)] = block_value(y, block, step, static_cast<std::size_t>(j));
  }
  return z;
}

std::vector<float> convolve(std::span<const float> x, std::span<const float> h) {
  if (x.empty() || h.empty()) return {};
  const OlaPlan p = make_ola_plan(x.size(), h.size());
  const Fft fft(p.fft_size);
  const auto hspec = filter_spectrum(h, fft);
  std::vector<std::vector<double>> parts(p.blocks);
  const auto blocks = static_cast<std::int64_t>(p.blocks);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t b = 0; b < blocks; ++b) {
    ola_block(x, p, fft, hspec, static_cast<std::size_t>(b), parts[static_cast<std::size_t>(b)]);
  }
  std::vector<float> out(p.out_len);
  const auto n_out = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t n = 0; n < n_out; ++n) {
    out[static_cast<std::size_t>(n)] = ola_sum(p, parts, static_cast<std::size_t>(n));
  }
  return out;
}

std::vector<float> resample(std::span<const float> x, const ResampleMap& map,
                            const SincTable& kernel, std::size_t out_frames) {
  std::vector<float> out(out_frames);
  const auto n = static_cast<std::int64_t>(out_frames);
#pragma omp parallel for schedule(static)
  for (std::int64_t m = 0; m < n; ++m) {
    out[static_cast<std::size_t>(m)] =
        resample_sample(x, map, kernel, static_cast<std::size_t>(m));
  }
  return out;
}

}  // namespace parallel

std::vector<double> convolve_direct(std::span<const float> x,
                                    std::span<const float> h) {
  if (x.empty() || h.empty()) return {};
  std::vector<double> out(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t k = 0; k < h.size(); ++k) {
      out[i + k] += static_cast<double>(x[i]) * static_cast<double>(h[k]);
    }
  }
  return out;
}

}  // namespace sonicforge::kernels
