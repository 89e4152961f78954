#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "lsden/error.hpp"
#include "lsden/fft.hpp"
#include "lsden/rng.hpp"

namespace lsden {

/// A mono sample sequence and its rate in Hz.
struct Signal {
  std::vector<double> samples;
  int sample_rate = 0;

  std::size_t size() const noexcept { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

inline void validate(const Signal& s) {
  require(!s.samples.empty(), Errc::invalid_argument, "signal has no samples");
  require(s.sample_rate > 0, Errc::invalid_argument, "sample rate must be positive");
}

/// Bounds of the min-max map onto [-1, 1].
struct AffineParams {
  double x_min = -1.0;
  double x_max = 1.0;

  bool operator==(const AffineParams&) const = default;
};

inline void validate(const AffineParams& p) {
  require(p.x_max > p.x_min, Errc::degenerate_input, "affine bounds require x_max > x_min");
}

/// Applies 2 (x - x_min) / (x_max - x_min) - 1 with caller-supplied bounds.
inline std::vector<double> apply_affine(std::span<const double> x, const AffineParams& p) {
  validate(p);
  const double span = p.x_max - p.x_min;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = 2.0 * (x[i] - p.x_min) / span - 1.0;
  return out;
}

inline std::vector<double> invert_affine(std::span<const double> y, const AffineParams& p) {
  validate(p);
  const double span = p.x_max - p.x_min;
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = (y[i] + 1.0) * 0.5 * span + p.x_min;
  return out;
}

/// Min-max normalization to [-1, 1]. The extreme samples land on -1 and +1
/// exactly.
inline std::pair<Signal, AffineParams> normalize(const Signal& signal) {
  validate(signal);
  const auto [lo, hi] = std::ranges::minmax_element(signal.samples);
  require(*hi > *lo, Errc::degenerate_input, "cannot normalize a constant signal");
  const AffineParams params{*lo, *hi};
  return {Signal{apply_affine(signal.samples, params), signal.sample_rate}, params};
}

inline Signal denormalize(const Signal& signal, const AffineParams& params) {
  validate(signal);
  return Signal{invert_affine(signal.samples, params), signal.sample_rate};
}

// ---------------------------------------------------------------------------
// Half-rate resampling

/// Kaiser-windowed sinc low-pass used ahead of decimation by two.
///
/// The -6 dB point sits at 0.45 of the output sample rate (0.9 of the output
/// Nyquist). The transition band ends at the output Nyquist so everything that
/// would alias is at least `stopband_db` down. Taps sum to exactly one.
inline std::vector<double> half_band_lowpass(double stopband_db = 65.0) {
  // Frequencies as fractions of the input rate.
  const double cutoff = 0.225;
  const double transition = 0.05;
  const double beta = stopband_db > 50.0 ? 0.1102 * (stopband_db - 8.7)
                                         : 0.5842 * std::pow(stopband_db - 21.0, 0.4) +
                                               0.07886 * (stopband_db - 21.0);
  int order = static_cast<int>(
      std::ceil((stopband_db - 8.0) / (2.285 * 2.0 * std::numbers::pi * transition)));
  if (order % 2 != 0) ++order;
  const int taps = order + 1;
  const double half = order / 2.0;
  const double i0_beta = std::cyl_bessel_i(0.0, beta);

  std::vector<double> h(taps);
  double sum = 0.0;
  for (int k = 0; k < taps; ++k) {
    const double t = k - half;
    const double arg = 2.0 * cutoff * t;
    const double sinc = t == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double r = t / half;
    const double window = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[k] = 2.0 * cutoff * sinc * window;
    sum += h[k];
  }
  for (double& v : h) v /= sum;
  return h;
}

/// Low-pass then keep every other sample. Edges use whole-sample symmetric
/// reflection, so a constant input stays constant end to end.
inline Signal resample_half(const Signal& signal) {
  validate(signal);
  require(signal.sample_rate % 2 == 0, Errc::invalid_argument,
          "resample_half needs an even sample rate");
  const auto h = half_band_lowpass();
  const auto& x = signal.samples;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(h.size() / 2);

  auto at = [&](std::ptrdiff_t i) {
    if (n == 1) return x[0];
    const std::ptrdiff_t period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? x[i] : x[period - i];
  };

  Signal out{std::vector<double>((x.size() + 1) / 2), signal.sample_rate / 2};
  for (std::size_t k = 0; k < out.samples.size(); ++k) {
    const std::ptrdiff_t centre = 2 * static_cast<std::ptrdiff_t>(k);
    double acc = 0.0;
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(h.size()); ++j)
      acc += h[j] * at(centre + half - j);
    out.samples[k] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic breath cycles

/// Parameters of one synthetic respiratory cycle: a band-limited noise
/// carrier shaped by an inhale bump followed by a weaker exhale bump.
struct BreathSpec {
  double cycle_seconds = 5.0;
  double inhale_fraction = 0.4;
  double band_low = 40.0;
  double band_high = 400.0;
  double exhale_gain = 0.4;
  /// Carrier power inside the band falls as 1/f^spectral_exponent.
  double spectral_exponent = 3.0;
  std::uint64_t seed = 1;
};

inline void validate(const BreathSpec& spec) {
  require(spec.cycle_seconds > 0.0, Errc::invalid_argument, "cycle_seconds must be positive");
  require(spec.inhale_fraction > 0.0 && spec.inhale_fraction < 1.0, Errc::invalid_argument,
          "inhale_fraction must lie in (0, 1)");
  require(spec.band_low >= 20.0 && spec.band_low < spec.band_high && spec.band_high <= 2000.0,
          Errc::invalid_argument, "band must satisfy 20 <= band_low < band_high <= 2000");
  require(spec.exhale_gain > 0.0 && spec.exhale_gain <= 1.0, Errc::invalid_argument,
          "exhale_gain must lie in (0, 1]");
  require(spec.spectral_exponent >= 0.0 && spec.spectral_exponent <= 4.0, Errc::invalid_argument,
          "spectral_exponent must lie in [0, 4]");
}

/// Two half-sine lobes over u = k / (n - 1): inhale on [0, f), exhale on
/// [f, 1] scaled by exhale_gain.
inline std::vector<double> breath_envelope(const BreathSpec& spec, std::size_t n) {
  validate(spec);
  std::vector<double> env(n, 0.0);
  if (n < 2) return env;
  const double f = spec.inhale_fraction;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(n - 1);
    env[k] = u < f ? std::sin(std::numbers::pi * u / f)
                   : spec.exhale_gain * std::sin(std::numbers::pi * (1.0 - u) / (1.0 - f));
  }
  return env;
}

inline Signal synth_breath_cycle(const BreathSpec& spec, int sample_rate) {
  validate(spec);
  require(sample_rate > 0 && sample_rate >= 2.0 * spec.band_high, Errc::invalid_argument,
          "sample rate must be at least twice band_high");
  const auto n = static_cast<std::size_t>(std::llround(spec.cycle_seconds * sample_rate));
  require(n >= 16, Errc::invalid_argument, "cycle too short");

  Rng rng(spec.seed);
  std::vector<double> white(n);
  for (double& v : white) v = rng.gaussian();

  // 1/f^exponent power inside the band, nothing outside.
  auto spectrum = fft::rfft(white);
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double freq = static_cast<double>(k) * sample_rate / static_cast<double>(n);
    if (freq < spec.band_low || freq > spec.band_high)
      spectrum[k] = 0.0;
    else
      spectrum[k] *= std::pow(freq, -spec.spectral_exponent / 2.0);
  }
  auto carrier = fft::irfft(spectrum, n);
  const auto env = breath_envelope(spec, n);

  double peak = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    carrier[k] *= env[k];
    peak = std::max(peak, std::abs(carrier[k]));
  }
  require(peak > 0.0, Errc::numerical_failure, "synthetic carrier vanished");
  for (double& v : carrier) v *= 0.9 / peak;
  return Signal{std::move(carrier), sample_rate};
}

}  // namespace lsden
