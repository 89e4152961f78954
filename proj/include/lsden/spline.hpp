#pragma once

#include <span>
#include <vector>

#include "lsden/error.hpp"

namespace lsden {

/// Natural cubic spline (zero second derivative at both end knots).
class NaturalSpline {
 public:
  NaturalSpline(std::vector<double> knots, std::vector<double> values)
      : x_(std::move(knots)), y_(std::move(values)), m_(x_.size(), 0.0) {
    require(x_.size() == y_.size(), Errc::invalid_argument, "spline knots/values size mismatch");
    require(x_.size() >= 2, Errc::invalid_argument, "spline needs at least two knots");
    for (std::size_t i = 1; i < x_.size(); ++i)
      require(x_[i] > x_[i - 1], Errc::invalid_argument, "spline knots must increase strictly");
    solve_moments();
  }

  /// Evaluates at sorted query points in one pass.
  void evaluate_sorted(std::span<const double> t, std::span<double> out) const {
    std::size_t seg = 0;
    const std::size_t last = x_.size() - 2;
    for (std::size_t q = 0; q < t.size(); ++q) {
      while (seg < last && t[q] > x_[seg + 1]) ++seg;
      out[q] = eval_segment(seg, t[q]);
    }
  }

  double operator()(double t) const {
    std::size_t lo = 0, hi = x_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (t < x_[mid] ? hi : lo) = mid;
    }
    return eval_segment(lo, t);
  }

 private:
  double eval_segment(std::size_t i, double t) const {
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h;
    const double b = (t - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h) / 6.0;
  }

  // Thomas algorithm on the interior second-derivative system.
  void solve_moments() {
    const std::size_t n = x_.size();
    if (n < 3) return;
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
      const double diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
      c[i] = h1 / diag;
      d[i] = (rhs - h0 * d[i - 1]) / diag;
    }
    for (std::size_t i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
  }

  std::vector<double> x_, y_, m_;
};

}  // namespace lsden
