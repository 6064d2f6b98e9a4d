#include <catch_amalgamated.hpp>

#include <cmath>

#include "sonicforge/kernels.hpp"
#include "sonicforge/rng.hpp"

using namespace sonicforge;

namespace {

std::vector<float> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> x(n);
  for (auto& v : x) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return x;
}

}  // namespace

TEST_CASE("serial and parallel STFT agree bit for bit") {
  const auto x = noise(20000, 1);
  const auto a = kernels::serial::stft_magnitude(x, 1024, 256);
  const auto b = kernels::parallel::stft_magnitude(x, 1024, 256);
  CHECK(a.frames == (20000 + 255) / 256);
  CHECK(a.magnitude == b.magnitude);
}

TEST_CASE("serial and parallel block mean square agree bit for bit") {
  const auto xf = noise(48000, 2);
  const std::vector<double> x(xf.begin(), xf.end());
  const auto a = kernels::serial::block_mean_square(x, 19200, 4800);
  CHECK(a.size() == 7);
  CHECK(a == kernels::parallel::block_mean_square(x, 19200, 4800));
}

TEST_CASE("FFT convolution matches the direct oracle") {
  const auto x = noise(9000, 3);
  const auto h = noise(700, 4);
  const auto fast = kernels::serial::convolve(x, h);
  const auto direct = kernels::convolve_direct(x, h);
  REQUIRE(fast.size() == direct.size());
  double err = 0.0;
  for (std::size_t i = 0; i < fast.size(); ++i) {
    err = std::max(err, std::abs(fast[i] - direct[i]));
  }
  CHECK(err < 1e-4);
  CHECK(fast == kernels::parallel::convolve(x, h));
}

TEST_CASE("convolution spanning several overlap-add blocks") {
  const auto x = noise(30000, 5);
  const auto h = noise(3000, 6);
  const auto fast = kernels::parallel::convolve(x, h);
  const auto direct = kernels::convolve_direct(x, h);
  double err = 0.0;
  for (std::size_t i = 0; i < fast.size(); ++i) {
    err = std::max(err, std::abs(fast[i] - direct[i]));
  }
  CHECK(err < 1e-3);
  CHECK(fast == kernels::serial::convolve(x, h));
}

TEST_CASE("serial and parallel resampling agree bit for bit") {
  const auto x = noise(16000, 7);
  kernels::ResampleMap map;
  map.num = 1;
  map.den = 3;
  const kernels::SincTable table(1.0, 64);
  CHECK(kernels::serial::resample(x, map, table, 48000) ==
        kernels::parallel::resample(x, map, table, 48000));
  kernels::ResampleMap stepped;
  stepped.step = 1.0594630943592953;
  stepped.cutoff = 1.0 / stepped.step;
  const kernels::SincTable t2(stepped.cutoff, 64);
  CHECK(kernels::serial::resample(x, stepped, t2, 15000) ==
        kernels::parallel::resample(x, stepped, t2, 15000));
}

TEST_CASE("sinc table interpolates exactly at integer offsets") {
  const kernels::SincTable t(1.0, 64);
  CHECK(t(0.0) == Catch::Approx(1.0));
  CHECK(std::abs(t(1.0)) < 1e-9);
  CHECK(std::abs(t(5.0)) < 1e-9);
  CHECK(t(40.0) == 0.0);
}
