#pragma once

#include <complex>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace lsden::fft {

// FFTW's planner is not re-entrant; execution on a private plan is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Real-to-complex transform, n/2 + 1 bins, unnormalized.
inline std::vector<std::complex<double>> rfft(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> out(x.size() / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

/// Inverse of rfft for a length-n signal, unnormalized (result is n * x).
inline std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n) {
  std::vector<std::complex<double>> in(spectrum.begin(), spectrum.end());
  in.resize(n / 2 + 1);
  std::vector<double> out(n);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                out.data(), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace lsden::fft
