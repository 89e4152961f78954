#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lsden/fft.hpp"
#include "lsden/rng.hpp"
#include "lsden/signal.hpp"
#include "oracles.hpp"

using namespace lsden;

namespace {

Signal tone(double freq, int rate, double seconds, double amp = 1.0) {
  Signal s{std::vector<double>(static_cast<std::size_t>(rate * seconds)), rate};
  for (std::size_t i = 0; i < s.size(); ++i)
    s.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate);
  return s;
}

}  // namespace

TEST(Normalize, MapsToUnitRange) {
  auto [out, params] = normalize(Signal{{2.0, 4.0, 6.0}, 100});
  EXPECT_EQ(out.samples, (std::vector<double>{-1.0, 0.0, 1.0}));
  EXPECT_EQ(params, (AffineParams{2.0, 6.0}));
}

TEST(Normalize, FullRangeSignalIsFixedPoint) {
  const std::vector<double> x{-1.0, -0.25, 0.5, 1.0, 0.0};
  auto [out, params] = normalize(Signal{x, 100});
  EXPECT_EQ(out.samples, x);
}

TEST(Normalize, ConstantSignalIsDegenerate) {
  try {
    normalize(Signal{{5.0, 5.0, 5.0}, 100});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_input);
  }
}

TEST(Normalize, ExtremesLandExactly) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Signal s{std::vector<double>(257), 1000};
    const double scale = rng.uniform(0.001, 1000.0), shift = rng.uniform(-50.0, 50.0);
    for (double& v : s.samples) v = scale * rng.gaussian() + shift;
    auto [out, params] = normalize(s);
    EXPECT_EQ(*std::ranges::min_element(out.samples), -1.0);
    EXPECT_EQ(*std::ranges::max_element(out.samples), 1.0);
  }
}

TEST(Denormalize, WorkedValues) {
  EXPECT_EQ(denormalize(Signal{{-1.0, 1.0}, 10}, {0.0, 10.0}).samples, (std::vector<double>{0.0, 10.0}));
  EXPECT_EQ(denormalize(Signal{{0.0}, 10}, {-3.0, 5.0}).samples, (std::vector<double>{1.0}));
}

TEST(Denormalize, RoundTripIsIdentity) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Signal s{std::vector<double>(500), 4000};
    const double scale = std::pow(10.0, rng.uniform(-3.0, 3.0));
    for (double& v : s.samples) v = scale * (rng.gaussian() + 0.3);
    auto [n, p] = normalize(s);
    const auto back = denormalize(n, p);
    for (std::size_t i = 0; i < s.size(); ++i)
      EXPECT_LE(std::abs(back.samples[i] - s.samples[i]), 1e-12 * (std::abs(s.samples[i]) + scale));

    // The other direction: denormalize then normalize with the same bounds.
    const auto fwd = apply_affine(denormalize(n, p).samples, p);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(fwd[i], n.samples[i], 1e-12);
  }
}

TEST(ResampleHalf, PreservesPassbandTone) {
  const auto in = tone(100.0, 8000, 1.0);
  const auto out = resample_half(in);
  EXPECT_EQ(out.sample_rate, 4000);
  EXPECT_EQ(out.size(), 4000u);
  const auto fit = oracle::fit_sine(out.samples, 100.0, 4000.0, 100);
  EXPECT_NEAR(fit.amplitude, 1.0, 0.01);

  // Frequency: the fitted amplitude peaks at 100 Hz against neighbours.
  EXPECT_GT(fit.amplitude, oracle::fit_sine(out.samples, 99.0, 4000.0, 100).amplitude);
  EXPECT_GT(fit.amplitude, oracle::fit_sine(out.samples, 101.0, 4000.0, 100).amplitude);
}

TEST(ResampleHalf, PassbandEdgeWithinOnePercent) {
  // 0.4 of the output Nyquist.
  const auto out = resample_half(tone(800.0, 8000, 1.0, 0.7));
  EXPECT_NEAR(oracle::fit_sine(out.samples, 800.0, 4000.0, 100).amplitude, 0.7, 0.007);
}

TEST(ResampleHalf, ConstantStaysConstant) {
  const auto out = resample_half(Signal{std::vector<double>(1001, 0.25), 8000});
  EXPECT_EQ(out.size(), 501u);
  for (double v : out.samples) EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(ResampleHalf, AttenuatesAliasingTone) {
  const auto in = tone(3500.0, 8000, 1.0);
  const auto out = resample_half(in);
  const double p_in = oracle::tone_power(in.samples, 3500.0, 8000.0);
  // 3500 Hz folds to 500 Hz at the 4000 Hz output rate.
  const double p_out = oracle::tone_power(std::span(out.samples).subspan(100, out.size() - 200), 500.0, 4000.0);
  EXPECT_LT(10.0 * std::log10(p_out / p_in), -40.0);
}

TEST(ResampleHalf, OddRateRejected) {
  EXPECT_THROW(resample_half(Signal{{1.0, 2.0}, 8001}), Error);
}

TEST(ResampleHalf, StopbandIsSixtyDbDown) {
  const auto h = half_band_lowpass();
  // Evaluate the frequency response directly on a fine grid above the output
  // Nyquist (0.25 of the input rate).
  for (double f = 0.25; f <= 0.5; f += 0.001) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) acc += h[k] * std::polar(1.0, -2.0 * std::numbers::pi * f * k);
    EXPECT_LT(20.0 * std::log10(std::abs(acc)), -60.0) << "f = " << f;
  }
}

TEST(Breath, Deterministic) {
  BreathSpec spec;
  spec.seed = 42;
  EXPECT_EQ(synth_breath_cycle(spec, 4000).samples, synth_breath_cycle(spec, 4000).samples);
  spec.seed = 43;
  BreathSpec other;
  other.seed = 42;
  EXPECT_NE(synth_breath_cycle(spec, 4000).samples, synth_breath_cycle(other, 4000).samples);
}

TEST(Breath, SymmetricEnvelope) {
  BreathSpec spec;
  spec.exhale_gain = 1.0;
  spec.inhale_fraction = 0.5;
  for (std::size_t n : {1000u, 1001u, 20000u}) {
    const auto env = breath_envelope(spec, n);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(env[k], env[n - 1 - k], 1e-9);
  }
}

TEST(Breath, PeakAndBandPower) {
  BreathSpec spec;
  spec.seed = 9;
  const auto s = synth_breath_cycle(spec, 4000);
  double peak = 0.0;
  for (double v : s.samples) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 0.9, 1e-12);

  // Integrate the periodogram inside and outside the band.
  const auto spec_bins = fft::rfft(s.samples);
  double inside = 0.0, total = 0.0;
  for (std::size_t k = 0; k < spec_bins.size(); ++k) {
    const double f = static_cast<double>(k) * 4000.0 / s.size();
    const double p = std::norm(spec_bins[k]);
    total += p;
    if (f >= spec.band_low && f <= spec.band_high) inside += p;
  }
  EXPECT_GE(inside / total, 0.95);
}

TEST(Breath, InvalidSpecsRejected) {
  BreathSpec spec;
  spec.band_low = 10.0;
  EXPECT_THROW(synth_breath_cycle(spec, 4000), Error);
  spec = {};
  spec.inhale_fraction = 1.0;
  EXPECT_THROW(synth_breath_cycle(spec, 4000), Error);
  spec = {};
  spec.band_high = 2000.0;
  EXPECT_THROW(synth_breath_cycle(spec, 3000), Error);
}
