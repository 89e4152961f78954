#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "lsden/error.hpp"
#include "lsden/fft.hpp"
#include "lsden/io.hpp"

namespace lsden {

/// 10 log10(sum desired^2 / sum (candidate - desired)^2). Identical inputs
/// give +infinity.
inline double snr_db(std::span<const double> desired, std::span<const double> candidate) {
  require(desired.size() == candidate.size(), Errc::invalid_argument, "SNR inputs differ in length");
  require(!desired.empty(), Errc::invalid_argument, "SNR of empty signals");
  double signal = 0.0, error = 0.0;
  for (std::size_t i = 0; i < desired.size(); ++i) {
    signal += desired[i] * desired[i];
    const double e = candidate[i] - desired[i];
    error += e * e;
  }
  require(signal > 0.0, Errc::degenerate_input, "desired signal has zero energy");
  if (error == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / error);
}

/// 100 (1 - sum (candidate - desired)^2 / sum (desired - mean)^2).
inline double fit_pct(std::span<const double> desired, std::span<const double> candidate) {
  require(desired.size() == candidate.size(), Errc::invalid_argument, "Fit inputs differ in length");
  require(!desired.empty(), Errc::invalid_argument, "Fit of empty signals");
  double mean = 0.0;
  for (double v : desired) mean += v;
  mean /= static_cast<double>(desired.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < desired.size(); ++i) {
    const double e = candidate[i] - desired[i];
    const double d = desired[i] - mean;
    num += e * e;
    den += d * d;
  }
  require(den > 0.0, Errc::degenerate_input, "desired signal is constant");
  return 100.0 * (1.0 - num / den);
}

// ---------------------------------------------------------------------------
// Spectrogram

/// Periodic Hann window, w[k] = 0.5 (1 - cos(2 pi k / n)).
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k)
    w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n)));
  return w;
}

/// Short-time magnitude grid, frames x (window_len / 2 + 1).
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t window_len = 0;
  std::size_t hop = 0;
  std::vector<double> magnitude;  // row-major, frame-major

  double at(std::size_t frame, std::size_t bin) const { return magnitude[frame * bins + bin]; }
};

inline Spectrogram spectrogram(std::span<const double> x, std::size_t window_len = 256, std::size_t hop = 128) {
  require(window_len >= 2 && window_len <= x.size(), Errc::invalid_argument,
          "window length must lie in [2, signal length]");
  require(hop >= 1, Errc::invalid_argument, "hop must be at least 1");
  Spectrogram s;
  s.window_len = window_len;
  s.hop = hop;
  s.frames = (x.size() - window_len) / hop + 1;
  s.bins = window_len / 2 + 1;
  s.magnitude.resize(s.frames * s.bins);
  const auto w = hann_window(window_len);
  std::vector<double> frame(window_len);
  for (std::size_t f = 0; f < s.frames; ++f) {
    for (std::size_t k = 0; k < window_len; ++k) frame[k] = x[f * hop + k] * w[k];
    const auto spec = fft::rfft(frame);
    for (std::size_t b = 0; b < s.bins; ++b) s.magnitude[f * s.bins + b] = std::abs(spec[b]);
  }
  return s;
}

/// Text matrix: one line per frame, bins separated by spaces, 17 significant
/// digits.
inline void write_spectrogram_text(const Spectrogram& s, const std::filesystem::path& path) {
  atomic_write(path, std::ios::out, [&](std::ostream& out) {
    out << std::setprecision(17);
    for (std::size_t f = 0; f < s.frames; ++f) {
      for (std::size_t b = 0; b < s.bins; ++b) out << (b ? " " : "") << s.at(f, b);
      out << '\n';
    }
  });
}

/// Binary PGM (P5, 8-bit). Columns are frames, rows are bins with the highest
/// frequency on top. Gray level maps 20 log10 magnitude linearly over
/// [peak - dynamic_range_db, peak].
inline void write_spectrogram_pgm(const Spectrogram& s, const std::filesystem::path& path,
                                  double dynamic_range_db = 80.0) {
  double peak = 0.0;
  for (double m : s.magnitude) peak = std::max(peak, m);
  const double peak_db = peak > 0.0 ? 20.0 * std::log10(peak) : 0.0;
  std::string body;
  body.reserve(s.frames * s.bins);
  for (std::size_t b = s.bins; b-- > 0;) {
    for (std::size_t f = 0; f < s.frames; ++f) {
      const double m = s.at(f, b);
      const double db = m > 0.0 ? 20.0 * std::log10(m) : -std::numeric_limits<double>::infinity();
      const double level = std::clamp((db - (peak_db - dynamic_range_db)) / dynamic_range_db, 0.0, 1.0);
      body.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(level * 255.0))));
    }
  }
  atomic_write(path, std::ios::binary, [&](std::ostream& out) {
    out << "P5\n" << s.frames << ' ' << s.bins << "\n255\n";
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
  });
}

}  // namespace lsden
