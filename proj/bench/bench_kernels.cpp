// Serial vs OpenMP kernels on a 4 s 48 kHz signal.
#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "sonicforge/kernels.hpp"
#include "sonicforge/rng.hpp"

namespace k = sonicforge::kernels;

namespace {

std::vector<float> noise(std::size_t n, std::uint64_t seed) {
  sonicforge::Rng rng(seed);
  std::vector<float> x(n);
  for (auto& v : x) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return x;
}

const std::vector<float>& signal() {
  static const auto x = noise(192000, 1);
  return x;
}

const std::vector<float>& room() {
  static const auto h = [] {
    auto ir = noise(48000, 2);
    for (std::size_t i = 0; i < ir.size(); ++i) ir[i] *= static_cast<float>(std::exp(-6.9 * i / 48000.0));
    return ir;
  }();
  return h;
}

template <auto Fn>
void BM_stft(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(Fn(signal(), 2048, 512));
}

template <auto Fn>
void BM_block_ms(benchmark::State& st) {
  std::vector<double> y(signal().begin(), signal().end());
  for (auto& v : y) v *= v;
  for (auto _ : st) benchmark::DoNotOptimize(Fn(y, 19200, 4800));
}

template <auto Fn>
void BM_convolve(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(Fn(signal(), room()));
}

template <auto Fn>
void BM_resample(benchmark::State& st) {
  const k::ResampleMap map{147, 160, 0.0, 1.0};
  const k::SincTable table(1.0, 32);
  const std::size_t out = signal().size() * 160 / 147;
  for (auto _ : st) benchmark::DoNotOptimize(Fn(signal(), map, table, out));
}

}  // namespace

BENCHMARK(BM_stft<k::serial::stft_magnitude>)->Name("stft/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_stft<k::parallel::stft_magnitude>)->Name("stft/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_block_ms<k::serial::block_mean_square>)->Name("block_ms/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_block_ms<k::parallel::block_mean_square>)->Name("block_ms/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_convolve<k::serial::convolve>)->Name("convolve/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_convolve<k::parallel::convolve>)->Name("convolve/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_resample<k::serial::resample>)->Name("resample/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_resample<k::parallel::resample>)->Name("resample/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
