#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "lsden/error.hpp"
#include "lsden/io.hpp"
#include "lsden/signal.hpp"
#include "lsden/spline.hpp"

namespace lsden {

struct Extremum {
  std::size_t index;
  double value;
};

struct Extrema {
  std::vector<Extremum> maxima;
  std::vector<Extremum> minima;

  std::size_t count() const noexcept { return maxima.size() + minima.size(); }
};

/// Strict interior local extrema. A flat run bounded by lower (higher)
/// neighbours on both sides is one maximum (minimum) at the run midpoint.
/// Runs touching either endpoint are ignored.
inline Extrema find_extrema(std::span<const double> x) {
  require(x.size() >= 3, Errc::invalid_argument, "find_extrema needs at least 3 samples");
  Extrema out;
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    std::size_t j = i;
    while (j + 1 < n && x[j + 1] == x[i]) ++j;
    if (j + 1 >= n) break;  // run reaches the last sample
    const double left = x[i - 1], right = x[j + 1], v = x[i];
    const std::size_t mid = i + (j - i) / 2;
    if (v > left && v > right)
      out.maxima.push_back({mid, v});
    else if (v < left && v < right)
      out.minima.push_back({mid, v});
    i = j + 1;
  }
  return out;
}

/// Sign changes, with exact zeros skipped over.
inline std::size_t count_zero_crossings(std::span<const double> x) {
  std::size_t crossings = 0;
  int prev = 0;
  for (double v : x) {
    const int s = (v > 0.0) - (v < 0.0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++crossings;
    prev = s;
  }
  return crossings;
}

/// |#extrema - #zero crossings| <= 1.
inline bool satisfies_imf_condition(std::span<const double> x) {
  if (x.size() < 3) return false;
  const auto e = static_cast<long>(find_extrema(x).count());
  const auto z = static_cast<long>(count_zero_crossings(x));
  return std::abs(e - z) <= 1;
}

struct Envelopes {
  std::vector<double> upper;
  std::vector<double> lower;
};

namespace detail {

// Knots are the extrema plus the two nearest on each side mirrored about the
// endpoint samples (or the single one, when only one exists).
inline std::vector<double> spline_through(const std::vector<Extremum>& ext, std::size_t n) {
  const double right_edge = static_cast<double>(n - 1);
  const std::size_t mirrored = std::min<std::size_t>(2, ext.size());
  std::vector<double> kx, ky;
  kx.reserve(ext.size() + 2 * mirrored);
  ky.reserve(kx.capacity());
  for (std::size_t m = mirrored; m-- > 0;) {
    kx.push_back(-static_cast<double>(ext[m].index));
    ky.push_back(ext[m].value);
  }
  for (const auto& e : ext) {
    kx.push_back(static_cast<double>(e.index));
    ky.push_back(e.value);
  }
  for (std::size_t m = 0; m < mirrored; ++m) {
    const auto& e = ext[ext.size() - 1 - m];
    kx.push_back(2.0 * right_edge - static_cast<double>(e.index));
    ky.push_back(e.value);
  }
  NaturalSpline spline(std::move(kx), std::move(ky));
  std::vector<double> t(n), out(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i);
  spline.evaluate_sorted(t, out);
  return out;
}

}  // namespace detail

/// Upper and lower cubic-spline envelopes through the maxima and minima.
/// Returns nullopt when the input lacks a maximum or a minimum, i.e. it is a
/// monotonic residue as far as sifting is concerned.
inline std::optional<Envelopes> envelopes(std::span<const double> x) {
  if (x.size() < 3) return std::nullopt;
  const auto ext = find_extrema(x);
  if (ext.maxima.empty() || ext.minima.empty()) return std::nullopt;
  return Envelopes{detail::spline_through(ext.maxima, x.size()),
                   detail::spline_through(ext.minima, x.size())};
}

/// Sifting controls. The stop rule is the aggregate Cauchy criterion
/// sum (h_prev - h)^2 / sum h_prev^2 < sd_threshold, taken only once h also
/// meets the extrema/zero-crossing condition.
struct SiftConfig {
  double sd_threshold = 0.2;
  int max_sift_iters = 100;
  int max_imfs = 15;
};

inline void validate(const SiftConfig& cfg) {
  require(cfg.sd_threshold > 0.0, Errc::invalid_argument, "sd_threshold must be positive");
  require(cfg.max_sift_iters >= 1, Errc::invalid_argument, "max_sift_iters must be >= 1");
  require(cfg.max_imfs >= 1, Errc::invalid_argument, "max_imfs must be >= 1");
}

struct ImfSplit {
  std::vector<double> imf;
  std::vector<double> remainder;
  int iterations = 0;
};

/// Sifts one IMF out of x. nullopt means x has no oscillation left to sift.
inline std::optional<ImfSplit> extract_imf(std::span<const double> x, const SiftConfig& cfg) {
  validate(cfg);
  std::vector<double> h(x.begin(), x.end());
  // The cap ends the SD search, but an IMF must still satisfy the extrema
  // rule, so sifting goes on past the cap until it does, for at most another
  // max_sift_iters rounds.
  int iter = 0;
  for (; iter < 2 * cfg.max_sift_iters; ++iter) {
    auto env = envelopes(h);
    if (!env) {
      if (iter == 0) return std::nullopt;
      break;
    }
    double diff = 0.0, energy = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double mean = 0.5 * (env->upper[i] + env->lower[i]);
      energy += h[i] * h[i];
      diff += mean * mean;
      h[i] -= mean;
    }
    if (energy == 0.0) break;
    const bool converged = diff / energy < cfg.sd_threshold || iter + 1 >= cfg.max_sift_iters;
    if (converged && satisfies_imf_condition(h)) {
      ++iter;
      break;
    }
  }
  ImfSplit split{std::move(h), std::vector<double>(x.size()), iter};
  for (std::size_t i = 0; i < x.size(); ++i) split.remainder[i] = x[i] - split.imf[i];
  return split;
}

/// IMFs ordered from highest to lowest oscillation rate, plus the residue.
struct ImfStack {
  std::vector<std::vector<double>> imfs;
  std::vector<double> residue;
  std::size_t source_length = 0;

  std::vector<double> reconstruct() const {
    std::vector<double> out = residue;
    for (const auto& imf : imfs)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += imf[i];
    return out;
  }
};

inline ImfStack decompose(std::span<const double> x, const SiftConfig& cfg = {}) {
  validate(cfg);
  require(!x.empty(), Errc::invalid_argument, "cannot decompose an empty signal");
  const auto [lo, hi] = std::ranges::minmax_element(x);
  require(*hi > *lo, Errc::degenerate_input, "cannot decompose a constant signal");

  ImfStack stack{{}, std::vector<double>(x.begin(), x.end()), x.size()};
  while (static_cast<int>(stack.imfs.size()) < cfg.max_imfs) {
    if (stack.residue.size() < 3 || find_extrema(stack.residue).count() < 3) break;
    auto split = extract_imf(stack.residue, cfg);
    if (!split) break;
    stack.imfs.push_back(std::move(split->imf));
    stack.residue = std::move(split->remainder);
  }
  return stack;
}

inline ImfStack decompose(const Signal& signal, const SiftConfig& cfg = {}) {
  validate(signal);
  return decompose(std::span<const double>(signal.samples), cfg);
}

/// Mean value of a component over its support; reported, not enforced.
inline double imf_integral(std::span<const double> imf) {
  double s = 0.0;
  for (double v : imf) s += v;
  return imf.empty() ? 0.0 : s / static_cast<double>(imf.size());
}

inline constexpr std::size_t kImfChannels = 13;

/// Fixed-width view of a decomposition: channels 1..12 are IMFs 1..12 (zero
/// when absent); channel 13 is every deeper IMF plus the residue.
struct Imf13 {
  std::array<std::vector<double>, kImfChannels> channels;
  AffineParams affine;

  std::size_t length() const noexcept { return channels[0].size(); }

  std::array<double, kImfChannels> row(std::size_t t) const {
    std::array<double, kImfChannels> r{};
    for (std::size_t c = 0; c < kImfChannels; ++c) r[c] = channels[c][t];
    return r;
  }
};

inline Imf13 to_fixed_13(const ImfStack& stack, const AffineParams& affine) {
  const std::size_t n = stack.residue.size();
  Imf13 out;
  out.affine = affine;
  for (std::size_t c = 0; c + 1 < kImfChannels; ++c)
    out.channels[c] = c < stack.imfs.size() ? stack.imfs[c] : std::vector<double>(n, 0.0);
  auto& last = out.channels[kImfChannels - 1];
  last.assign(n, 0.0);
  for (std::size_t c = kImfChannels - 1; c < stack.imfs.size(); ++c)
    for (std::size_t i = 0; i < n; ++i) last[i] += stack.imfs[c][i];
  for (std::size_t i = 0; i < n; ++i) last[i] += stack.residue[i];
  return out;
}

/// Whitespace-separated columns: one per IMF, then the residue; one row per
/// sample. Values are printed with 17 significant digits.
inline void write_imf_columns(const ImfStack& stack, const std::filesystem::path& path) {
  atomic_write(path, std::ios::out, [&](std::ostream& out) {
    out << "#";
    for (std::size_t c = 0; c < stack.imfs.size(); ++c) out << " imf" << (c + 1);
    out << " residue\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < stack.residue.size(); ++i) {
      for (const auto& imf : stack.imfs) out << imf[i] << ' ';
      out << stack.residue[i] << '\n';
    }
  });
}

}  // namespace lsden
