#include <catch_amalgamated.hpp>

#include <cmath>

#include "sonicforge/audio_ops.hpp"
#include "sonicforge/errors.hpp"
#include "sonicforge/loudness.hpp"
#include "support/signals.hpp"

using namespace sonicforge;

// Frozen from an independent numpy/scipy meter built on the published 48 kHz
// K-weighting coefficients (-3.0103 / -23.0103); a second independent meter
// with re-derived filters reads -3.052 / -23.052.
constexpr double kSine997FullScale = -3.0103;
constexpr double kSine997Minus20 = -23.0103;

TEST_CASE("997 Hz full-scale sine reads -3.01 LUFS") {
  const auto m = measure_integrated_lufs(testsig::sine(997, 1.0, 10.0));
  CHECK(std::abs(m.integrated_lufs - kSine997FullScale) <= 0.1);
  CHECK(m.gated_block_count == 97);
}

TEST_CASE("the same sine 20 dB down reads -23.01 LUFS") {
  const auto m = measure_integrated_lufs(testsig::sine(997, 0.1, 10.0));
  CHECK(std::abs(m.integrated_lufs - kSine997Minus20) <= 0.1);
}

TEST_CASE("44.1 kHz input uses derived coefficients") {
  const auto m = measure_integrated_lufs(testsig::sine(997, 1.0, 10.0, 44100));
  CHECK(std::abs(m.integrated_lufs - kSine997FullScale) <= 0.1);
}

TEST_CASE("other rates are resampled to 48 kHz first") {
  const auto m = measure_integrated_lufs(testsig::sine(997, 1.0, 5.0, 16000));
  CHECK(std::abs(m.integrated_lufs - kSine997FullScale) <= 0.1);
}

TEST_CASE("derived design reproduces the published 48 kHz coefficients") {
  const auto pub = k_weighting(48000);
  const auto der = k_weighting_derived(48000);
  for (int i = 0; i < 3; ++i) {
    CHECK(der.shelf.b[i] == Catch::Approx(pub.shelf.b[i]).margin(1e-6));
    CHECK(der.highpass.b[i] == Catch::Approx(pub.highpass.b[i]).margin(1e-6));
  }
  for (int i = 0; i < 2; ++i) {
    CHECK(der.shelf.a[i] == Catch::Approx(pub.shelf.a[i]).margin(1e-6));
    CHECK(der.highpass.a[i] == Catch::Approx(pub.highpass.a[i]).margin(1e-6));
  }
}

TEST_CASE("silence is below the gate") {
  CHECK_THROWS_AS(measure_integrated_lufs(testsig::silence(2.0)), BelowGateError);
  CHECK_THROWS_AS(gain_to_target(testsig::silence(2.0), -20), BelowGateError);
}

TEST_CASE("gain equivariance") {
  const Waveform w = testsig::white_noise(0.1, 4.0, 11);
  const double base = measure_integrated_lufs(w).integrated_lufs;
  for (double g : {-18.0, -6.0, 0.0, 3.5, 9.0}) {
    const auto scaled = apply_gain(w, g);
    REQUIRE(scaled.clipped_samples == 0);
    CHECK(std::abs(measure_integrated_lufs(scaled.waveform).integrated_lufs - (base + g)) <= 0.1);
  }
}

TEST_CASE("mono duplicated to stereo measures +3.01 LU") {
  const Waveform m = testsig::harmonic_tone(220, 3.0, 4.0);
  const Waveform s(48000, {m.planar()[0], m.planar()[0]});
  CHECK(std::abs(loudness_delta(s, m) - 3.0103) <= 0.1);
}

TEST_CASE("gain_to_target") {
  const Waveform w = gain_to_target(testsig::harmonic_tone(330, 3.0, 4.0), -20.0).waveform;
  SECTION("+5 dB step") {
    const auto r = gain_to_target(w, -15.0);
    CHECK(std::abs(r.applied_gain_db - 5.0) <= 0.2);
    CHECK(std::abs(measure_integrated_lufs(r.waveform).integrated_lufs + 15.0) <= 0.2);
  }
  SECTION("target equal to current loudness") {
    const auto r = gain_to_target(w, measure_integrated_lufs(w).integrated_lufs);
    CHECK(std::abs(r.applied_gain_db) <= 0.2);
    for (std::size_t i = 0; i < w.frames(); ++i) {
      REQUIRE(std::abs(r.waveform.channel(0)[i] - w.channel(0)[i]) <= std::ldexp(1.0, -15));
    }
  }
  SECTION("near-full-scale sine pushed 6 LU up reports clipping") {
    const Waveform hot = testsig::sine(440, 0.9, 4.0);
    const double now = measure_integrated_lufs(hot).integrated_lufs;
    const auto r = gain_to_target(hot, now + 6.0);
    CHECK(r.clipped_samples > 0);
  }
}

TEST_CASE("loudness_delta") {
  const Waveform w = testsig::white_noise(0.2, 4.0, 3);
  CHECK(std::abs(loudness_delta(w, w)) <= 0.05);
  CHECK(std::abs(loudness_delta(w, apply_gain(w, -6.0).waveform) - 6.0) <= 0.2);
  CHECK_THROWS_AS(loudness_delta(w, testsig::silence(1.0)), BelowGateError);
}

TEST_CASE("measurement is deterministic") {
  const Waveform w = testsig::white_noise(0.2, 3.0, 8);
  CHECK(measure_integrated_lufs(w) == measure_integrated_lufs(w));
}
