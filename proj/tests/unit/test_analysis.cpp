#include <catch_amalgamated.hpp>

#include <cmath>

#include "sonicforge/analysis.hpp"
#include "sonicforge/audio_ops.hpp"
#include "sonicforge/errors.hpp"
#include "sonicforge/transforms.hpp"
#include "support/signals.hpp"

using namespace sonicforge;

TEST_CASE("f0 of a 440 Hz sine") {
  const auto f0 = estimate_f0(testsig::sine(440, 0.5, 2.0));
  REQUIRE(f0);
  CHECK(std::abs(*f0 - 440.0) <= 1.0);
}

TEST_CASE("white noise has no f0") {
  CHECK_FALSE(estimate_f0(testsig::white_noise(0.3, 2.0, 11)));
}

TEST_CASE("f0 after a one-semitone shift") {
  const auto shifted = pitch_shift(testsig::sine(440, 0.5, 4.0), 1.0);
  const auto f0 = estimate_f0(shifted);
  REQUIRE(f0);
  CHECK(std::abs(*f0 - 466.16) <= 4.0);
}

TEST_CASE("f0 of harmonic tones across the range") {
  for (double f : {55.0, 110.0, 261.63, 880.0, 1760.0}) {
    const auto f0 = estimate_f0(testsig::harmonic_tone(f, 1.5, 2.0));
    REQUIRE(f0);
    CHECK(std::abs(*f0 / f - 1.0) < 0.01);
  }
}

TEST_CASE("f0 is gain invariant") {
  const auto w = testsig::harmonic_tone(330, 1.5, 2.0);
  const auto a = estimate_f0(w);
  for (double g : {-18.0, -6.0, 3.0}) {
    const auto b = estimate_f0(apply_gain(w, g).waveform);
    REQUIRE(a);
    REQUIRE(b);
    CHECK(*a == Catch::Approx(*b).epsilon(1e-6));
  }
}

TEST_CASE("centroid of a 1 kHz sine") {
  CHECK(std::abs(spectral_centroid(testsig::sine(1000, 0.5, 2.0)) - 1000.0) <= 25.0);
}

TEST_CASE("centroid of white noise sits near half of Nyquist") {
  const double c = spectral_centroid(testsig::white_noise(0.3, 2.0, 5));
  CHECK(std::abs(c / 12000.0 - 1.0) <= 0.10);
}

TEST_CASE("low-passed noise has a lower centroid") {
  const auto n = testsig::white_noise(0.3, 2.0, 5);
  CHECK(spectral_centroid(testsig::lowpass(n, 2000)) < spectral_centroid(n));
}

TEST_CASE("centroid of silence throws") {
  CHECK_THROWS_AS(spectral_centroid(testsig::silence(1.0)), SilenceError);
}

TEST_CASE("silence has no onsets") {
  const auto r = count_onsets(testsig::silence(4.0));
  CHECK(r.count == 0);
  CHECK(r.times_s.empty());
}

TEST_CASE("clicks 30 ms apart merge into one onset") {
  const auto r = count_onsets(testsig::click_track({1.0, 1.03}, 0.01, 3.0));
  CHECK(r.count == 1);
}

TEST_CASE("well separated clicks are counted with their times") {
  const std::vector<double> at = {0.3, 0.9, 1.6, 2.2, 3.1};
  const auto r = count_onsets(testsig::click_track(at, 0.02, 4.0));
  REQUIRE(r.count == at.size());
  for (std::size_t i = 0; i < at.size(); ++i) CHECK(std::abs(r.times_s[i] - at[i]) < 0.02);
  for (std::size_t i = 1; i < r.times_s.size(); ++i) CHECK(r.times_s[i] > r.times_s[i - 1]);
}

TEST_CASE("onset count is gain invariant over [-12, 0] dB") {
  const auto w = testsig::click_track({0.4, 1.1, 1.9, 2.5}, 0.03, 4.0);
  const auto base = count_onsets(w).count;
  for (double g : {-12.0, -6.0, -3.0, 0.0}) {
    CHECK(count_onsets(apply_gain(w, g).waveform).count == base);
  }
}

TEST_CASE("active duration of a padded tone") {
  CHECK(std::abs(active_duration(testsig::harmonic_tone(220, 2.0, 4.0)) - 2.0) <= 0.02);
}

TEST_CASE("active duration of silence is zero") {
  CHECK(active_duration(testsig::silence(4.0)) == 0.0);
}

TEST_CASE("active duration of full-length noise") {
  CHECK(std::abs(active_duration(testsig::white_noise(0.3, 4.0, 3)) - 4.0) <= 0.02);
}

TEST_CASE("tempo of clicks every 0.6 s") {
  const auto t = estimate_tempo(testsig::clicks_every(0.6, 0.1, 6.0));
  REQUIRE(t);
  CHECK(std::abs(*t - 100.0) <= 2.0);
}

TEST_CASE("tempo after stretching by 0.8") {
  const auto w = time_stretch(testsig::clicks_every(0.6, 0.1, 6.0), 0.8);
  const auto t = estimate_tempo(w);
  REQUIRE(t);
  CHECK(std::abs(*t - 125.0) <= 3.0);
}

TEST_CASE("a single click has no tempo") {
  CHECK_FALSE(estimate_tempo(testsig::click_track({1.0}, 0.02, 3.0)));
}

TEST_CASE("irregular intervals have no tempo") {
  CHECK_FALSE(tempo_from_onsets({0.0, 0.2, 1.2, 1.4, 2.9}));
}

TEST_CASE("report fields agree with the individual oracles") {
  const auto w = testsig::harmonic_tone(220, 2.0, 4.0);
  const auto r = analyze(w);
  REQUIRE(r.f0_hz);
  CHECK(std::abs(*r.f0_hz - 220.0) < 2.2);
  REQUIRE(r.centroid_hz);
  REQUIRE(r.integrated_lufs);
  CHECK(r.onset_count == r.onset_times_s.size());
  CHECK(r.active_duration_s <= w.duration_s());
}

TEST_CASE("report of silence leaves measurements undefined") {
  const auto r = analyze(testsig::silence(4.0));
  CHECK_FALSE(r.f0_hz);
  CHECK_FALSE(r.centroid_hz);
  CHECK_FALSE(r.integrated_lufs);
  CHECK(r.onset_count == 0);
}

TEST_CASE("MIDI conversions") {
  CHECK(midi_to_hz(69) == Catch::Approx(440.0));
  CHECK(hz_to_midi(880.0) == Catch::Approx(81.0));
}
