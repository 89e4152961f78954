#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lsden/error.hpp"
#include "lsden/fft.hpp"
#include "lsden/rng.hpp"
#include "lsden/signal.hpp"

namespace lsden {

enum class NoiseKind { white, pink };

constexpr std::string_view to_string(NoiseKind kind) noexcept {
  return kind == NoiseKind::white ? "white" : "pink";
}

inline NoiseKind parse_noise_kind(std::string_view text) {
  if (text == "white") return NoiseKind::white;
  if (text == "pink") return NoiseKind::pink;
  throw Error(Errc::invalid_argument, "unknown noise kind '" + std::string(text) + "'");
}

/// One contamination: which noise, its spectral exponent, target SNR and seed.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::white;
  double alpha = 0.0;
  double target_snr_db = 0.0;
  std::uint64_t seed = 0;

  static NoiseSpec white(double snr_db, std::uint64_t seed) { return {NoiseKind::white, 0.0, snr_db, seed}; }
  static NoiseSpec pink(double snr_db, std::uint64_t seed, double alpha = 1.0) {
    return {NoiseKind::pink, alpha, snr_db, seed};
  }
};

inline void validate(const NoiseSpec& spec) {
  if (spec.kind == NoiseKind::white)
    require(spec.alpha == 0.0, Errc::invalid_argument, "white noise has alpha = 0");
  else
    require(spec.alpha > 0.0 && spec.alpha < 2.0, Errc::invalid_argument,
            "pink noise needs 0 < alpha < 2");
  require(std::isfinite(spec.target_snr_db), Errc::invalid_argument, "target SNR must be finite");
}

/// i.i.d. standard normal samples.
inline std::vector<double> gen_white(std::size_t length, std::uint64_t seed) {
  require(length >= 2, Errc::invalid_argument, "noise length must be at least 2");
  Rng rng(seed);
  std::vector<double> out(length);
  for (double& v : out) v = rng.gaussian();
  return out;
}

/// 1/f^alpha noise by spectral shaping: white Gaussian spectrum, bin k scaled
/// by k^(-alpha/2), DC removed, then standardized to zero mean and unit
/// variance.
inline std::vector<double> gen_pink(std::size_t length, double alpha, std::uint64_t seed) {
  require(alpha > 0.0 && alpha < 2.0, Errc::invalid_argument, "pink noise needs 0 < alpha < 2");
  auto white = gen_white(length, seed);
  auto spectrum = fft::rfft(white);
  spectrum[0] = 0.0;
  for (std::size_t k = 1; k < spectrum.size(); ++k)
    spectrum[k] *= std::pow(static_cast<double>(k), -alpha / 2.0);
  auto out = fft::irfft(spectrum, length);

  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / length;
  double var = 0.0;
  for (double& v : out) {
    v -= mean;
    var += v * v;
  }
  var /= length;
  const double scale = 1.0 / std::sqrt(var);
  for (double& v : out) v *= scale;
  return out;
}

inline std::vector<double> gen_noise(const NoiseSpec& spec, std::size_t length) {
  validate(spec);
  return spec.kind == NoiseKind::white ? gen_white(length, spec.seed)
                                       : gen_pink(length, spec.alpha, spec.seed);
}

struct Mixture {
  Signal noisy;
  std::vector<double> scaled_noise;
};

/// noisy = clean + k * noise with k set so that
/// 10 log10(sum clean^2 / sum (k noise)^2) equals target_snr_db.
inline Mixture mix_at_snr(const Signal& clean, std::span<const double> noise, double target_snr_db) {
  validate(clean);
  require(noise.size() == clean.size(), Errc::invalid_argument, "clean and noise lengths differ");
  const double clean_energy = std::inner_product(clean.samples.begin(), clean.samples.end(),
                                                 clean.samples.begin(), 0.0);
  const double noise_energy = std::inner_product(noise.begin(), noise.end(), noise.begin(), 0.0);
  require(clean_energy > 0.0, Errc::degenerate_input, "clean signal has zero energy");
  require(noise_energy > 0.0, Errc::degenerate_input, "noise has zero energy");

  const double k = std::sqrt(clean_energy / (noise_energy * std::pow(10.0, target_snr_db / 10.0)));
  Mixture m{Signal{clean.samples, clean.sample_rate}, std::vector<double>(noise.size())};
  for (std::size_t i = 0; i < noise.size(); ++i) {
    m.scaled_noise[i] = k * noise[i];
    m.noisy.samples[i] += m.scaled_noise[i];
  }
  return m;
}

inline Mixture contaminate(const Signal& clean, const NoiseSpec& spec) {
  return mix_at_snr(clean, gen_noise(spec, clean.size()), spec.target_snr_db);
}

}  // namespace lsden
