#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "lsden/emd.hpp"
#include "lsden/error.hpp"
#include "lsden/mlp.hpp"
#include "lsden/noise.hpp"
#include "lsden/rng.hpp"
#include "lsden/signal.hpp"

namespace lsden {

enum class Optimizer { levenberg_marquardt, gradient_descent };

struct TrainSpec {
  std::vector<int> structure = ann_structure(5);
  int epochs = 200;
  double lm_lambda0 = 1e-3;
  double lm_lambda_up = 10.0;
  double lm_lambda_down = 0.1;
  double lm_lambda_max = 1e10;
  double lm_lambda_min = 1e-12;
  /// Rows per epoch; datasets at most this size train full-batch.
  std::size_t block_rows = 2048;
  Optimizer optimizer = Optimizer::levenberg_marquardt;
  double gd_step = 0.05;
  std::vector<double> snr_set{0.0, 5.0, 10.0, 15.0, 20.0};
  std::vector<NoiseKind> noise_kinds{NoiseKind::white};
  double pink_alpha = 1.0;
  std::uint64_t seed = 1;
};

inline void validate(const TrainSpec& s) {
  require(s.epochs >= 1, Errc::invalid_argument, "epochs must be >= 1");
  require(s.lm_lambda0 > 0.0, Errc::invalid_argument, "lambda0 must be positive");
  require(s.lm_lambda_up > 1.0, Errc::invalid_argument, "lambda up factor must exceed 1");
  require(s.lm_lambda_down > 0.0 && s.lm_lambda_down < 1.0, Errc::invalid_argument,
          "lambda down factor must lie in (0, 1)");
  require(s.lm_lambda_max > s.lm_lambda0, Errc::invalid_argument, "lambda_max must exceed lambda0");
  require(s.block_rows >= 1, Errc::invalid_argument, "block_rows must be >= 1");
  require(s.gd_step > 0.0, Errc::invalid_argument, "gd_step must be positive");
  require(s.pink_alpha > 0.0 && s.pink_alpha < 2.0, Errc::invalid_argument, "pink alpha must lie in (0, 2)");
}

// ---------------------------------------------------------------------------
// Contamination and preparation

enum class Role : std::uint64_t { train = 1, test = 2 };

/// Noise seed for one (cycle, kind, SNR) cell. Training and test draws never
/// share a seed.
inline std::uint64_t contamination_seed(std::uint64_t base, Role role, std::size_t cycle, NoiseKind kind,
                                        double snr_db) {
  return derive_seed(base, static_cast<std::uint64_t>(role), cycle, static_cast<std::uint64_t>(kind),
                     static_cast<std::uint64_t>(std::llround(snr_db * 1000.0)));
}

/// A contaminated cycle in the normalized domain: the noisy signal's affine map
/// is applied to both noisy and clean, so the additive relation survives.
struct PreparedExample {
  Imf13 imfs;
  std::vector<double> noisy;
  std::vector<double> clean;
  std::size_t imf_count = 0;
};

inline PreparedExample prepare_example(const Signal& clean, const NoiseSpec& noise, const SiftConfig& cfg) {
  const auto mix = contaminate(clean, noise);
  auto [noisy_n, affine] = normalize(mix.noisy);
  PreparedExample ex;
  const auto stack = decompose(noisy_n, cfg);
  ex.imf_count = stack.imfs.size();
  ex.imfs = to_fixed_13(stack, affine);
  ex.noisy = std::move(noisy_n.samples);
  ex.clean = apply_affine(clean.samples, affine);
  return ex;
}

inline NoiseSpec noise_for(NoiseKind kind, double snr_db, std::uint64_t seed, double pink_alpha) {
  return kind == NoiseKind::white ? NoiseSpec::white(snr_db, seed) : NoiseSpec::pink(snr_db, seed, pink_alpha);
}

// ---------------------------------------------------------------------------
// Dataset

struct RowOrigin {
  std::size_t cycle = 0;
  NoiseKind kind = NoiseKind::white;
  double snr_db = 0.0;
  std::size_t begin = 0;  // first row
  std::size_t end = 0;    // one past the last row
};

/// Per-sample 13-vectors and their clean targets, concatenated across every
/// (cycle, kind, SNR) combination. Origins are stored as contiguous row
/// ranges.
class SampleDataset {
 public:
  std::size_t rows() const noexcept { return targets_.size(); }
  bool empty() const noexcept { return targets_.empty(); }

  std::span<const double> row(std::size_t r) const {
    return {inputs_.data() + r * kImfChannels, kImfChannels};
  }
  double target(std::size_t r) const { return targets_[r]; }
  std::span<const double> targets() const noexcept { return targets_; }
  const std::vector<RowOrigin>& segments() const noexcept { return segments_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  const RowOrigin& origin(std::size_t r) const {
    require(r < rows(), Errc::invalid_argument, "row index out of range");
    auto it = std::upper_bound(segments_.begin(), segments_.end(), r,
                               [](std::size_t v, const RowOrigin& s) { return v < s.end; });
    return *it;
  }

  void append(const PreparedExample& ex, std::size_t cycle, NoiseKind kind, double snr_db) {
    const std::size_t begin = rows();
    const std::size_t n = ex.imfs.length();
    inputs_.reserve(inputs_.size() + n * kImfChannels);
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t c = 0; c < kImfChannels; ++c) inputs_.push_back(ex.imfs.channels[c][t]);
    targets_.insert(targets_.end(), ex.clean.begin(), ex.clean.end());
    segments_.push_back({cycle, kind, snr_db, begin, rows()});
  }

  void warn(std::string message) { warnings_.push_back(std::move(message)); }

  /// Keeps only the segments accepted by `keep`, preserving order.
  template <typename Pred>
  SampleDataset filtered(Pred keep) const {
    SampleDataset out;
    out.warnings_ = warnings_;
    for (const auto& seg : segments_) {
      if (!keep(seg)) continue;
      const std::size_t begin = out.rows();
      out.inputs_.insert(out.inputs_.end(), inputs_.begin() + seg.begin * kImfChannels,
                         inputs_.begin() + seg.end * kImfChannels);
      out.targets_.insert(out.targets_.end(), targets_.begin() + seg.begin, targets_.begin() + seg.end);
      out.segments_.push_back({seg.cycle, seg.kind, seg.snr_db, begin, out.rows()});
    }
    return out;
  }

  Eigen::MatrixXd gather_inputs(std::span<const std::size_t> idx) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(kImfChannels));
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t c = 0; c < kImfChannels; ++c) x(k, c) = inputs_[idx[k] * kImfChannels + c];
    return x;
  }

  Eigen::VectorXd gather_targets(std::span<const std::size_t> idx) const {
    Eigen::VectorXd t(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) t(k) = targets_[idx[k]];
    return t;
  }

  /// Appends a raw row; used for synthetic datasets that bypass EMD.
  void push_row(std::span<const double> inputs, double target, std::size_t cycle = 0,
                NoiseKind kind = NoiseKind::white, double snr_db = 0.0) {
    require(inputs.size() == kImfChannels, Errc::invalid_argument, "rows hold 13 values");
    inputs_.insert(inputs_.end(), inputs.begin(), inputs.end());
    targets_.push_back(target);
    if (!segments_.empty() && segments_.back().end == rows() - 1 && segments_.back().cycle == cycle &&
        segments_.back().kind == kind && segments_.back().snr_db == snr_db)
      segments_.back().end = rows();
    else
      segments_.push_back({cycle, kind, snr_db, rows() - 1, rows()});
  }

 private:
  std::vector<double> inputs_;
  std::vector<double> targets_;
  std::vector<RowOrigin> segments_;
  std::vector<std::string> warnings_;
};

/// Contaminates every cycle with every (kind, SNR) of the spec, normalizes,
/// decomposes and concatenates the per-sample rows. Cycles that cannot be
/// decomposed are skipped with a warning.
inline SampleDataset make_dataset(std::span<const Signal> cycles, const TrainSpec& spec, const SiftConfig& cfg,
                                  Role role = Role::train) {
  validate(spec);
  require(!cycles.empty(), Errc::invalid_argument, "no training cycles");
  require(!spec.snr_set.empty(), Errc::invalid_argument, "empty SNR set");
  require(!spec.noise_kinds.empty(), Errc::invalid_argument, "no noise kinds");
  SampleDataset data;
  for (std::size_t c = 0; c < cycles.size(); ++c) {
    for (NoiseKind kind : spec.noise_kinds) {
      for (double snr : spec.snr_set) {
        const auto seed = contamination_seed(spec.seed, role, c, kind, snr);
        try {
          data.append(prepare_example(cycles[c], noise_for(kind, snr, seed, spec.pink_alpha), cfg), c, kind, snr);
        } catch (const Error& e) {
          data.warn("cycle " + std::to_string(c) + " (" + std::string(to_string(kind)) + ", " +
                    std::to_string(snr) + " dB) skipped: " + e.what());
        }
      }
    }
  }
  require(!data.empty(), Errc::degenerate_input, "every training cycle failed to decompose");
  return data;
}

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  int epoch = 0;
  double loss_before = 0.0;  // block MSE at the start of the epoch
  double loss_after = 0.0;   // block MSE after the (accepted) step
  double lambda = 0.0;       // damping used by the accepted step
  int retries = 0;           // rejected trial steps
  bool accepted = false;
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochRecord> history;
  bool stalled = false;
  std::string diagnostic;
};

/// Levenberg-Marquardt on the squared error, one damped Gauss-Newton step per
/// epoch over a row block. Each epoch solves (J^T J + lambda I) d = J^T r for
/// r = target - output; the step is kept only if the block MSE drops, in which
/// case lambda shrinks by lm_lambda_down, otherwise it grows by lm_lambda_up
/// and the solve is retried. Exceeding lm_lambda_max stops training with a
/// diagnostic. Blocks are drawn without replacement from a running
/// permutation seeded by spec.seed.
inline TrainResult train_lm(MlpModel model, const SampleDataset& data, const TrainSpec& spec) {
  validate(spec);
  validate(model);
  require(!data.empty(), Errc::invalid_argument, "empty dataset");

  TrainResult result;
  Rng rng(derive_seed(spec.seed, 0x7261696eULL));
  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool full_batch = data.rows() <= spec.block_rows;
  const std::size_t block = full_batch ? data.rows() : spec.block_rows;

  Eigen::MatrixXd x;
  Eigen::VectorXd t;
  if (full_batch) {
    x = data.gather_inputs(order);
    t = data.gather_targets(order);
  }

  const auto n_params = static_cast<Eigen::Index>(model.parameter_count());
  double lambda = spec.lm_lambda0;
  std::vector<double> params = model.parameters();
  MlpModel trial = model;

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    if (!full_batch) {
      for (std::size_t k = 0; k < block; ++k) std::swap(order[k], order[k + rng.below(order.size() - k)]);
      const std::span<const std::size_t> idx(order.data(), block);
      x = data.gather_inputs(idx);
      t = data.gather_targets(idx);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    Eigen::VectorXd out;
    const Eigen::MatrixXd jac = output_jacobian(model, x, &out);
    const Eigen::VectorXd resid = t - out;
    rec.loss_before = resid.squaredNorm() / static_cast<double>(block);

    if (spec.optimizer == Optimizer::gradient_descent) {
      const Eigen::VectorXd grad = (-2.0 / static_cast<double>(block)) * (jac.transpose() * resid);
      for (Eigen::Index i = 0; i < n_params; ++i) params[i] -= spec.gd_step * grad(i);
      model.set_parameters(params);
      rec.loss_after = mse(model, x, t);
      rec.accepted = true;
      result.history.push_back(rec);
      ++model.epochs_trained;
      continue;
    }

    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(n_params, n_params);
    normal.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
    const Eigen::VectorXd rhs = jac.transpose() * resid;

    while (true) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal().array() += lambda;
      Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(damped);
      bool improved = false;
      if (llt.info() == Eigen::Success) {
        const Eigen::VectorXd step = llt.solve(rhs);
        std::vector<double> candidate(params);
        for (Eigen::Index i = 0; i < n_params; ++i) candidate[i] += step(i);
        trial.set_parameters(candidate);
        const double loss = mse(trial, x, t);
        if (std::isfinite(loss) && loss < rec.loss_before) {
          params.swap(candidate);
          model.set_parameters(params);
          rec.loss_after = loss;
          rec.lambda = lambda;
          rec.accepted = true;
          lambda = std::max(lambda * spec.lm_lambda_down, spec.lm_lambda_min);
          improved = true;
        }
      }
      if (improved) break;
      ++rec.retries;
      lambda *= spec.lm_lambda_up;
      if (lambda > spec.lm_lambda_max) {
        rec.loss_after = rec.loss_before;
        rec.lambda = lambda;
        break;
      }
    }
    result.history.push_back(rec);
    ++model.epochs_trained;
    if (!rec.accepted) {
      result.stalled = true;
      result.diagnostic = "no decrease found below lambda_max at epoch " + std::to_string(epoch) +
                          " (block MSE " + std::to_string(rec.loss_before) + ")";
      break;
    }
  }
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Denoising with a trained model

struct AnnOutput {
  Signal normalized;
  AffineParams affine;
};

inline Eigen::MatrixXd imf_rows(const Imf13& imfs) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(imfs.length()), static_cast<Eigen::Index>(kImfChannels));
  for (std::size_t c = 0; c < kImfChannels; ++c)
    for (std::size_t t = 0; t < imfs.length(); ++t) x(t, c) = imfs.channels[c][t];
  return x;
}

inline std::vector<double> apply_model(const MlpModel& model, const Imf13& imfs) {
  const Eigen::VectorXd y = forward_batch(model, imf_rows(imfs));
  return {y.data(), y.data() + y.size()};
}

inline AnnOutput denoise_ann_normalized(const Signal& noisy, const MlpModel& model, const SiftConfig& cfg) {
  validate(model);
  auto [norm, affine] = normalize(noisy);
  const auto imfs = to_fixed_13(decompose(norm, cfg), affine);
  return {Signal{apply_model(model, imfs), noisy.sample_rate}, affine};
}

/// Normalize, decompose, map every 13-vector through the network, and undo
/// the normalization.
inline Signal denoise_ann(const Signal& noisy, const MlpModel& model, const SiftConfig& cfg) {
  auto out = denoise_ann_normalized(noisy, model, cfg);
  return denormalize(out.normalized, out.affine);
}

}  // namespace lsden
