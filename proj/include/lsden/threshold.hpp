#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lsden/emd.hpp"
#include "lsden/error.hpp"
#include "lsden/signal.hpp"

namespace lsden {

// ---------------------------------------------------------------------------
// Universal threshold

/// Robust first-IMF noise energy: (median |c1| / 0.6745)^2.
inline double estimate_e1(std::span<const double> imf1) {
  require(!imf1.empty(), Errc::invalid_argument, "first IMF is empty");
  std::vector<double> mag(imf1.size());
  std::ranges::transform(imf1, mag.begin(), [](double v) { return std::abs(v); });
  const std::size_t mid = mag.size() / 2;
  std::ranges::nth_element(mag, mag.begin() + mid);
  double median = mag[mid];
  if (mag.size() % 2 == 0) {
    const double below = *std::max_element(mag.begin(), mag.begin() + mid);
    median = 0.5 * (median + below);
  }
  const double s = median / 0.6745;
  return s * s;
}

/// Model energy per IMF: E_1 for the first, (E_1 / 0.719) * 2.01^-i after.
inline std::vector<double> model_energies(double e1_sq, std::size_t n_imfs) {
  require(e1_sq >= 0.0, Errc::invalid_argument, "E1^2 must be non-negative");
  std::vector<double> energies(n_imfs);
  for (std::size_t i = 0; i < n_imfs; ++i) {
    const int index = static_cast<int>(i) + 1;
    energies[i] = index == 1 ? e1_sq : e1_sq / 0.719 * std::pow(2.01, -index);
  }
  return energies;
}

/// tau_i = C sqrt(E_i * 2 ln n), with ln n supplied directly.
inline std::vector<double> universal_thresholds_ln(std::span<const double> energies, double ln_n,
                                                   double c_const = 0.7) {
  std::vector<double> taus(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    require(energies[i] >= 0.0, Errc::invalid_argument, "negative IMF energy");
    taus[i] = c_const * std::sqrt(energies[i] * 2.0 * ln_n);
  }
  return taus;
}

/// Universal thresholds for a signal of n samples.
inline std::vector<double> universal_thresholds(std::span<const double> energies, std::size_t n,
                                                double c_const = 0.7) {
  require(n >= 2, Errc::invalid_argument, "signal length must be at least 2");
  return universal_thresholds_ln(energies, std::log(static_cast<double>(n)), c_const);
}

struct ThresholdPlan {
  std::vector<double> taus;
  double c_const = 0.7;
  std::vector<double> energies;
  double e1_sq = 0.0;
};

inline ThresholdPlan plan_thresholds(const ImfStack& stack, double c_const = 0.7) {
  ThresholdPlan plan;
  plan.c_const = c_const;
  if (stack.imfs.empty()) return plan;
  plan.e1_sq = estimate_e1(stack.imfs.front());
  plan.energies = model_energies(plan.e1_sq, stack.imfs.size());
  plan.taus = universal_thresholds(plan.energies, stack.source_length, c_const);
  return plan;
}

// ---------------------------------------------------------------------------
// Threshold rules

struct CustomParams {
  double alpha = 0.5;
  double gamma_ratio = 0.5;
};

inline void validate(const CustomParams& p) {
  require(p.alpha >= 0.0 && p.alpha <= 1.0, Errc::invalid_argument, "custom alpha must lie in [0, 1]");
  require(p.gamma_ratio > 0.0 && p.gamma_ratio < 1.0, Errc::invalid_argument,
          "gamma_ratio must lie in (0, 1)");
}

/// Keep iff |c| > tau.
inline double hard_rule(double c, double tau) { return std::abs(c) > tau ? c : 0.0; }

/// Shrink toward zero by tau.
inline double soft_rule(double c, double tau) {
  if (c >= tau) return c - tau;
  if (c <= -tau) return c + tau;
  return 0.0;
}

/// Custom rule with gamma = gamma_ratio * tau. The gap gamma < |c| < tau,
/// which the two-branch rule leaves open, is a linear ramp from 0 up to the
/// |c| >= tau branch value alpha * tau, keeping the map continuous.
inline double custom_rule(double c, double tau, double alpha, double gamma) {
  const double mag = std::abs(c);
  const double sgn = c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0);
  if (mag >= tau) return c - sgn * ((1.0 - alpha) * tau);
  if (mag <= gamma) return 0.0;
  return sgn * ((mag - gamma) / (tau - gamma) * (tau - (1.0 - alpha) * tau));
}

inline double custom_rule(double c, double tau, const CustomParams& p) {
  return custom_rule(c, tau, p.alpha, p.gamma_ratio * tau);
}

inline std::vector<double> threshold_hard(std::span<const double> c, double tau) {
  require(tau >= 0.0, Errc::invalid_argument, "threshold must be non-negative");
  std::vector<double> out(c.size());
  std::ranges::transform(c, out.begin(), [tau](double v) { return hard_rule(v, tau); });
  return out;
}

inline std::vector<double> threshold_soft(std::span<const double> c, double tau) {
  require(tau >= 0.0, Errc::invalid_argument, "threshold must be non-negative");
  std::vector<double> out(c.size());
  std::ranges::transform(c, out.begin(), [tau](double v) { return soft_rule(v, tau); });
  return out;
}

inline std::vector<double> threshold_custom(std::span<const double> c, double tau,
                                            const CustomParams& params) {
  require(tau >= 0.0, Errc::invalid_argument, "threshold must be non-negative");
  validate(params);
  std::vector<double> out(c.size());
  std::ranges::transform(c, out.begin(), [&](double v) { return custom_rule(v, tau, params); });
  return out;
}

// ---------------------------------------------------------------------------
// EMD thresholding denoisers

struct HardThreshold {};
struct SoftThreshold {};
using ThresholdRule = std::variant<HardThreshold, SoftThreshold, CustomParams>;

/// Applies `rule` to every IMF with its universal threshold and sums the
/// result with the untouched residue.
inline std::vector<double> threshold_stack(const ImfStack& stack, const ThresholdRule& rule,
                                           double c_const = 0.7) {
  const auto plan = plan_thresholds(stack, c_const);
  std::vector<double> out = stack.residue;
  for (std::size_t i = 0; i < stack.imfs.size(); ++i) {
    const auto cleaned = std::visit(
        [&](const auto& r) {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, HardThreshold>) return threshold_hard(stack.imfs[i], plan.taus[i]);
          else if constexpr (std::is_same_v<R, SoftThreshold>) return threshold_soft(stack.imfs[i], plan.taus[i]);
          else return threshold_custom(stack.imfs[i], plan.taus[i], r);
        },
        rule);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += cleaned[t];
  }
  return out;
}

/// Normalized-domain result of a threshold denoiser, together with the
/// affine map that took the noisy input there.
struct NormalizedOutput {
  Signal normalized;
  AffineParams affine;
};

inline NormalizedOutput denoise_emd_threshold_normalized(const Signal& noisy, const SiftConfig& cfg,
                                                         const ThresholdRule& rule, double c_const = 0.7) {
  auto [norm, affine] = normalize(noisy);
  const auto stack = decompose(norm, cfg);
  return {Signal{threshold_stack(stack, rule, c_const), noisy.sample_rate}, affine};
}

/// Normalize, decompose, threshold each IMF, reconstruct, and map back to the
/// input's amplitude range.
inline Signal denoise_emd_threshold(const Signal& noisy, const SiftConfig& cfg, const ThresholdRule& rule,
                                    double c_const = 0.7) {
  auto out = denoise_emd_threshold_normalized(noisy, cfg, rule, c_const);
  return denormalize(out.normalized, out.affine);
}

inline Signal denoise_emd_custom(const Signal& noisy, const SiftConfig& cfg, const CustomParams& params,
                                 double c_const = 0.7) {
  validate(params);
  return denoise_emd_threshold(noisy, cfg, params, c_const);
}

}  // namespace lsden
