#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lsden/emd.hpp"
#include "lsden/error.hpp"
#include "lsden/io.hpp"
#include "lsden/metrics.hpp"
#include "lsden/mlp.hpp"
#include "lsden/noise.hpp"
#include "lsden/signal.hpp"
#include "lsden/threshold.hpp"
#include "lsden/train.hpp"

namespace lsden {

// ---------------------------------------------------------------------------
// Configuration

/// A sweep model: trained on `train_kinds` (all table SNRs), tested on
/// `test_kind`.
struct SweepModel {
  std::vector<NoiseKind> train_kinds;
  NoiseKind test_kind = NoiseKind::white;

  bool operator==(const SweepModel&) const = default;
};

struct SweepSpec {
  double snr_min = -2.0;
  double snr_max = 20.0;
  double step = 1.0;
  std::vector<SweepModel> models{{{NoiseKind::white}, NoiseKind::white},
                                 {{NoiseKind::pink}, NoiseKind::pink},
                                 {{NoiseKind::white, NoiseKind::pink}, NoiseKind::white},
                                 {{NoiseKind::white, NoiseKind::pink}, NoiseKind::pink}};
  int trials = 3;
};

inline void validate(const SweepSpec& s) {
  require(s.snr_min <= s.snr_max, Errc::invalid_argument, "sweep needs snr_min <= snr_max");
  require(s.step > 0.0, Errc::invalid_argument, "sweep step must be positive");
  require(s.trials >= 1, Errc::invalid_argument, "sweep needs at least one trial");
  require(!s.models.empty(), Errc::invalid_argument, "sweep has no models");
  for (const auto& m : s.models) require(!m.train_kinds.empty(), Errc::invalid_argument, "sweep model has no noise");
}

/// Test SNRs of the sweep, computed as snr_min + k * step so the grid does not
/// drift.
inline std::vector<double> sweep_grid(const SweepSpec& s) {
  validate(s);
  const auto count = static_cast<std::size_t>(std::floor((s.snr_max - s.snr_min) / s.step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = s.snr_min + static_cast<double>(k) * s.step;
  return grid;
}

/// Everything a benchmark run depends on. The first `train_cycles` of the
/// corpus train, the rest test.
struct BenchConfig {
  std::size_t cycles = 16;
  std::size_t train_cycles = 12;
  int sample_rate = 4000;
  BreathSpec breath;
  SiftConfig sift;
  TrainSpec train = [] {
    TrainSpec t;
    t.block_rows = 16384;
    t.epochs = 300;
    return t;
  }();
  CustomParams custom;
  double c_const = 0.7;
  int trials = 3;
  std::uint64_t seed = 1;
  SweepSpec sweep;
};

inline void validate(const BenchConfig& c) {
  require(c.cycles >= 2, Errc::invalid_argument, "the corpus needs at least two cycles");
  require(c.train_cycles >= 1 && c.train_cycles < c.cycles, Errc::invalid_argument,
          "train_cycles must leave at least one test cycle");
  require(c.sample_rate > 0, Errc::invalid_argument, "sample rate must be positive");
  require(c.trials >= 1, Errc::invalid_argument, "trials must be >= 1");
  require(c.c_const > 0.0, Errc::invalid_argument, "C must be positive");
  validate(c.breath);
  validate(c.sift);
  validate(c.train);
  validate(c.custom);
  validate(c.sweep);
  require(!c.train.snr_set.empty(), Errc::invalid_argument, "empty SNR set");
}

// ---------------------------------------------------------------------------
// Corpus and seeds

inline constexpr std::uint64_t kCorpusLabel = 0x636f72707573ULL;
inline constexpr std::uint64_t kModelLabel = 0x6d6f64656cULL;
inline constexpr std::uint64_t kTrialLabel = 0x747269616cULL;

inline Signal corpus_cycle(const BenchConfig& cfg, std::size_t index) {
  BreathSpec b = cfg.breath;
  b.seed = derive_seed(cfg.seed, kCorpusLabel, index);
  return synth_breath_cycle(b, cfg.sample_rate);
}

inline std::vector<Signal> make_corpus(const BenchConfig& cfg) {
  std::vector<Signal> out;
  out.reserve(cfg.cycles);
  for (std::size_t c = 0; c < cfg.cycles; ++c) out.push_back(corpus_cycle(cfg, c));
  return out;
}

/// Noise kinds in canonical order (white before pink), deduplicated.
inline std::vector<NoiseKind> canonical_kinds(std::vector<NoiseKind> kinds) {
  std::ranges::sort(kinds);
  kinds.erase(std::unique(kinds.begin(), kinds.end()), kinds.end());
  return kinds;
}

inline std::string kinds_label(std::span<const NoiseKind> kinds) {
  std::string s;
  for (NoiseKind k : kinds) s += (s.empty() ? "" : "-") + std::string(to_string(k));
  return s;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string snr_set_label(std::span<const double> snrs) {
  std::string s;
  for (double v : snrs) s += (s.empty() ? "" : ";") + format_number(v);
  return s;
}

/// Dataset spec for one model: the configured training hyper-parameters with
/// the contamination drawn from the master seed.
inline TrainSpec model_train_spec(const BenchConfig& cfg, std::span<const NoiseKind> kinds,
                                  std::span<const double> snrs) {
  TrainSpec spec = cfg.train;
  spec.noise_kinds.assign(kinds.begin(), kinds.end());
  spec.snr_set.assign(snrs.begin(), snrs.end());
  spec.seed = cfg.seed;
  return spec;
}

/// Seed for a model's initial weights and block order.
inline std::uint64_t model_seed(const BenchConfig& cfg, std::span<const NoiseKind> kinds,
                                std::span<const double> snrs) {
  std::uint64_t s = derive_seed(cfg.seed, kModelLabel);
  for (NoiseKind k : kinds) s = derive_seed(s, static_cast<std::uint64_t>(k) + 1);
  s = derive_seed(s, 0xffULL);
  for (double v : snrs) s = derive_seed(s, static_cast<std::uint64_t>(std::llround(v * 1000.0)));
  return s;
}

/// Trains one denoiser on `data` exactly as the benchmark does.
inline TrainResult train_bench_model(const BenchConfig& cfg, const SampleDataset& data,
                                     std::span<const NoiseKind> kinds, std::span<const double> snrs) {
  TrainSpec spec = model_train_spec(cfg, kinds, snrs);
  spec.seed = model_seed(cfg, kinds, snrs);
  return train_lm(build_mlp(spec.structure, spec.seed), data, spec);
}

// ---------------------------------------------------------------------------
// Evaluation

/// A held-out cycle contaminated once, in the normalized domain.
struct TestExample {
  ImfStack stack;
  AffineParams affine;
  std::vector<double> noisy;
  std::vector<double> clean;
};

inline std::uint64_t test_seed(const BenchConfig& cfg, int trial, std::size_t cycle, NoiseKind kind, double snr) {
  return contamination_seed(derive_seed(cfg.seed, kTrialLabel, static_cast<std::uint64_t>(trial)), Role::test,
                            cycle, kind, snr);
}

inline TestExample make_test_example(const BenchConfig& cfg, const Signal& clean, std::size_t cycle, NoiseKind kind,
                                     double snr, int trial) {
  const auto mix = contaminate(clean, noise_for(kind, snr, test_seed(cfg, trial, cycle, kind, snr),
                                                cfg.train.pink_alpha));
  auto [norm, affine] = normalize(mix.noisy);
  TestExample ex;
  ex.stack = decompose(norm, cfg.sift);
  ex.affine = affine;
  ex.noisy = std::move(norm.samples);
  ex.clean = apply_affine(clean.samples, affine);
  return ex;
}

struct AnnMethod {
  const MlpModel* model;
};
using EvalMethod = std::variant<AnnMethod, ThresholdRule>;

/// Normalized-domain output of one method on one prepared example.
inline std::vector<double> run_method(const EvalMethod& method, const TestExample& ex, double c_const) {
  if (const auto* ann = std::get_if<AnnMethod>(&method))
    return apply_model(*ann->model, to_fixed_13(ex.stack, ex.affine));
  return threshold_stack(ex.stack, std::get<ThresholdRule>(method), c_const);
}

struct CellResult {
  double in_snr = 0.0;
  double out_snr = 0.0;
  double fit_pct = 0.0;
  std::size_t count = 0;
};

/// Means over examples. SNRs are measured against the normalized clean cycle.
inline CellResult evaluate(const EvalMethod& method, std::span<const TestExample> examples, double c_const) {
  require(!examples.empty(), Errc::invalid_argument, "no test examples");
  CellResult r;
  for (const auto& ex : examples) {
    const auto out = run_method(method, ex, c_const);
    r.in_snr += snr_db(ex.clean, ex.noisy);
    r.out_snr += snr_db(ex.clean, out);
    r.fit_pct += fit_pct(ex.clean, out);
  }
  r.count = examples.size();
  const auto n = static_cast<double>(r.count);
  r.in_snr /= n;
  r.out_snr /= n;
  r.fit_pct /= n;
  return r;
}

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
  std::string experiment;
  std::string method;
  std::string train_noise;
  std::string noise_kind;
  std::string train_snr_set;
  double test_snr = 0.0;
  double in_snr = 0.0;
  double out_snr = 0.0;
  double fit_pct = 0.0;
  std::uint64_t seed = 0;
  int trials = 0;
  double reference_out_snr = std::numeric_limits<double>::quiet_NaN();
  double reference_fit_pct = std::numeric_limits<double>::quiet_NaN();

  auto key() const { return std::tie(experiment, noise_kind, train_noise, method, test_snr); }

  friend bool operator==(const ReportRow& a, const ReportRow& b) {
    auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return a.experiment == b.experiment && a.method == b.method && a.train_noise == b.train_noise &&
           a.noise_kind == b.noise_kind && a.train_snr_set == b.train_snr_set && a.test_snr == b.test_snr &&
           same(a.in_snr, b.in_snr) && same(a.out_snr, b.out_snr) && same(a.fit_pct, b.fit_pct) &&
           a.seed == b.seed && a.trials == b.trials && same(a.reference_out_snr, b.reference_out_snr) &&
           same(a.reference_fit_pct, b.reference_fit_pct);
  }
};

struct EvalReport {
  std::vector<ReportRow> rows;

  void sort() {
    std::ranges::stable_sort(rows, [](const ReportRow& a, const ReportRow& b) { return a.key() < b.key(); });
  }

  const ReportRow* find(std::string_view method, std::string_view train_noise, std::string_view noise_kind,
                        double test_snr) const {
    for (const auto& r : rows)
      if (r.method == method && r.train_noise == train_noise && r.noise_kind == noise_kind && r.test_snr == test_snr)
        return &r;
    return nullptr;
  }

  bool operator==(const EvalReport&) const = default;
};

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{
      "experiment", "method", "train_noise", "noise_kind", "train_snr_set", "test_snr", "in_snr",
      "out_snr",    "fit_pct", "seed",       "trials",     "reference_out_snr", "reference_fit_pct"};
  return cols;
}

namespace detail {

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline nlohmann::json json_number(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

inline double from_json_number(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline std::string report_csv(const EvalReport& report) {
  std::string out;
  for (const auto& c : report_columns()) out += (out.empty() ? "" : ",") + c;
  out += '\n';
  for (const auto& r : report.rows) {
    out += r.experiment + ',' + r.method + ',' + r.train_noise + ',' + r.noise_kind + ',' + r.train_snr_set + ',' +
           format_number(r.test_snr) + ',' + detail::csv_number(r.in_snr) + ',' + detail::csv_number(r.out_snr) +
           ',' + detail::csv_number(r.fit_pct) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.trials) +
           ',' + detail::csv_number(r.reference_out_snr) + ',' + detail::csv_number(r.reference_fit_pct) + '\n';
  }
  return out;
}

inline nlohmann::json report_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"experiment", r.experiment},
                    {"method", r.method},
                    {"train_noise", r.train_noise},
                    {"noise_kind", r.noise_kind},
                    {"train_snr_set", r.train_snr_set},
                    {"test_snr", r.test_snr},
                    {"in_snr", detail::json_number(r.in_snr)},
                    {"out_snr", detail::json_number(r.out_snr)},
                    {"fit_pct", detail::json_number(r.fit_pct)},
                    {"seed", r.seed},
                    {"trials", r.trials},
                    {"reference_out_snr", detail::json_number(r.reference_out_snr)},
                    {"reference_fit_pct", detail::json_number(r.reference_fit_pct)}});
  }
  return {{"rows", rows}};
}

inline EvalReport parse_report_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_error, std::string("report is not valid JSON: ") + e.what());
  }
  EvalReport report;
  try {
    for (const auto& r : j.at("rows")) {
      ReportRow row;
      row.experiment = r.at("experiment").get<std::string>();
      row.method = r.at("method").get<std::string>();
      row.train_noise = r.at("train_noise").get<std::string>();
      row.noise_kind = r.at("noise_kind").get<std::string>();
      row.train_snr_set = r.at("train_snr_set").get<std::string>();
      row.test_snr = r.at("test_snr").get<double>();
      row.in_snr = detail::from_json_number(r.at("in_snr"));
      row.out_snr = detail::from_json_number(r.at("out_snr"));
      row.fit_pct = detail::from_json_number(r.at("fit_pct"));
      row.seed = r.at("seed").get<std::uint64_t>();
      row.trials = r.at("trials").get<int>();
      row.reference_out_snr = detail::from_json_number(r.at("reference_out_snr"));
      row.reference_fit_pct = detail::from_json_number(r.at("reference_fit_pct"));
      report.rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_error, std::string("report JSON has the wrong shape: ") + e.what());
  }
  return report;
}

/// Writes <stem>.csv and <stem>.json under `dir`.
inline void export_report(const EvalReport& report, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  const auto csv = report_csv(report);
  atomic_write(dir / (stem + ".csv"), std::ios::out, [&](std::ostream& out) { out << csv; });
  const auto json = report_json(report).dump(2);
  atomic_write(dir / (stem + ".json"), std::ios::out, [&](std::ostream& out) { out << json << '\n'; });
}

// ---------------------------------------------------------------------------
// Published reference values, indexed by SNR row 0, 5, 10, 15, 20 dB. Shown
// next to synthetic results; never used as pass/fail tolerances.

struct ReferenceCell {
  double snr;
  double fit;
};

inline std::optional<ReferenceCell> published_reference(std::string_view experiment, std::string_view method,
                                                        NoiseKind kind, double test_snr) {
  // {white IND, white COM, pink IND, pink COM} then {white ANN, white Custom, pink ANN, pink Custom}.
  static constexpr ReferenceCell t3[5][4] = {
      {{10.22, 89.45}, {9.41, 87.22}, {8.74, 85.49}, {8.23, 83.53}},
      {{13.80, 95.32}, {13.23, 94.67}, {12.18, 93.35}, {11.31, 91.86}},
      {{17.64, 98.04}, {16.76, 97.63}, {15.81, 97.11}, {14.63, 96.36}},
      {{21.53, 99.20}, {19.53, 98.71}, {17.22, 97.99}, {17.19, 98.03}},
      {{24.86, 99.63}, {21.01, 98.86}, {20.67, 98.87}, {20.45, 99.06}}};
  static constexpr ReferenceCell t4[5][4] = {
      {{9.41, 87.22}, {5.89, 74.25}, {8.23, 83.53}, {4.31, 62.96}},
      {{13.23, 94.67}, {9.97, 89.92}, {11.31, 91.86}, {8.56, 86.08}},
      {{16.76, 97.63}, {13.00, 94.99}, {14.63, 96.36}, {11.89, 93.53}},
      {{19.53, 98.71}, {15.93, 96.78}, {17.19, 98.03}, {14.20, 96.20}},
      {{21.01, 98.86}, {16.28, 97.04}, {20.45, 99.06}, {15.16, 96.95}}};
  const double row = test_snr / 5.0;
  if (row != std::floor(row) || row < 0.0 || row > 4.0) return std::nullopt;
  const auto r = static_cast<std::size_t>(row);
  const std::size_t k = kind == NoiseKind::white ? 0 : 2;
  if (experiment == "table3") {
    if (method == "IND-M") return t3[r][k];
    if (method == "COM-M") return t3[r][k + 1];
  } else if (experiment == "table4") {
    if (method == "EMD-ANN") return t4[r][k];
    if (method == "EMD-Custom") return t4[r][k + 1];
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Runner

/// Holds the corpus, training data, trained models and prepared test
/// examples so the three experiments share work. Single-threaded.
class BenchContext {
 public:
  using Log = std::function<void(const std::string&)>;

  explicit BenchContext(BenchConfig cfg, Log log = {}) : cfg_(std::move(cfg)), log_(std::move(log)) {
    validate(cfg_);
    corpus_ = make_corpus(cfg_);
  }

  const BenchConfig& config() const noexcept { return cfg_; }
  const std::vector<Signal>& corpus() const noexcept { return corpus_; }
  std::span<const Signal> train_cycles() const { return std::span(corpus_).first(cfg_.train_cycles); }

  /// Trained model for a (kinds, SNR set) pair, training it on first use.
  const MlpModel& model(std::vector<NoiseKind> kinds, const std::vector<double>& snrs) {
    kinds = canonical_kinds(std::move(kinds));
    const auto key = kinds_label(kinds) + "|" + snr_set_label(snrs);
    if (auto it = models_.find(key); it != models_.end()) return it->second;

    const auto& all = full_dataset();
    const auto data = all.filtered([&](const RowOrigin& o) {
      return std::ranges::find(kinds, o.kind) != kinds.end() && std::ranges::find(snrs, o.snr_db) != snrs.end();
    });
    note("training " + key + " on " + std::to_string(data.rows()) + " rows");
    auto result = train_bench_model(cfg_, data, kinds, snrs);
    if (result.stalled) note("  " + result.diagnostic);
    if (!result.history.empty()) note("  final block MSE " + format_number(result.history.back().loss_after));
    return models_.emplace(key, std::move(result.model)).first->second;
  }

  /// Prepared held-out examples for one test condition: every test cycle
  /// times every trial.
  const std::vector<TestExample>& test_set(NoiseKind kind, double snr, int trials) {
    const auto key = std::make_tuple(kind, std::llround(snr * 1000.0), trials);
    if (auto it = tests_.find(key); it != tests_.end()) return it->second;
    std::vector<TestExample> set;
    for (int trial = 0; trial < trials; ++trial)
      for (std::size_t c = cfg_.train_cycles; c < cfg_.cycles; ++c)
        set.push_back(make_test_example(cfg_, corpus_[c], c, kind, snr, trial));
    return tests_.emplace(key, std::move(set)).first->second;
  }

  const std::vector<TestExample>& test_set(NoiseKind kind, double snr) { return test_set(kind, snr, cfg_.trials); }

  void drop_test_set(NoiseKind kind, double snr, int trials) {
    tests_.erase(std::make_tuple(kind, std::llround(snr * 1000.0), trials));
  }

  /// Injects an externally trained model (e.g. loaded from disk).
  void put_model(std::vector<NoiseKind> kinds, const std::vector<double>& snrs, MlpModel m) {
    kinds = canonical_kinds(std::move(kinds));
    models_.insert_or_assign(kinds_label(kinds) + "|" + snr_set_label(snrs), std::move(m));
  }

  void note(const std::string& msg) const {
    if (log_) log_(msg);
  }

 private:
  const SampleDataset& full_dataset() {
    if (!full_) {
      note("building training rows from " + std::to_string(cfg_.train_cycles) + " cycles");
      const std::vector<NoiseKind> both{NoiseKind::white, NoiseKind::pink};
      full_ = make_dataset(train_cycles(), model_train_spec(cfg_, both, cfg_.train.snr_set), cfg_.sift);
      for (const auto& w : full_->warnings()) note("  " + w);
    }
    return *full_;
  }

  BenchConfig cfg_;
  Log log_;
  std::vector<Signal> corpus_;
  std::optional<SampleDataset> full_;
  std::map<std::string, MlpModel> models_;
  std::map<std::tuple<NoiseKind, long long, int>, std::vector<TestExample>> tests_;
};

namespace detail {

inline ReportRow make_row(const BenchContext& ctx, std::string experiment, std::string method,
                          std::string train_noise, NoiseKind kind, std::string snr_set, double test_snr,
                          const CellResult& cell, int trials) {
  ReportRow row{std::move(experiment), std::move(method), std::move(train_noise), std::string(to_string(kind)),
                std::move(snr_set), test_snr, cell.in_snr, cell.out_snr, cell.fit_pct, ctx.config().seed,
                trials};
  if (auto ref = published_reference(row.experiment, row.method, kind, test_snr)) {
    row.reference_out_snr = ref->snr;
    row.reference_fit_pct = ref->fit;
  }
  return row;
}

}  // namespace detail

/// Individual (one SNR) versus combined (all SNRs) models, per noise kind.
inline EvalReport run_table3(BenchContext& ctx) {
  const auto& cfg = ctx.config();
  const auto& snrs = cfg.train.snr_set;
  EvalReport report;
  for (NoiseKind kind : {NoiseKind::white, NoiseKind::pink}) {
    const std::string kname(to_string(kind));
    for (double snr : snrs) {
      const auto& tests = ctx.test_set(kind, snr);
      const std::vector<double> single{snr};
      const auto ind = evaluate(AnnMethod{&ctx.model({kind}, single)}, tests, cfg.c_const);
      report.rows.push_back(
          detail::make_row(ctx, "table3", "IND-M", kname, kind, snr_set_label(single), snr, ind, cfg.trials));
      const auto com = evaluate(AnnMethod{&ctx.model({kind}, snrs)}, tests, cfg.c_const);
      report.rows.push_back(
          detail::make_row(ctx, "table3", "COM-M", kname, kind, snr_set_label(snrs), snr, com, cfg.trials));
    }
  }
  report.sort();
  return report;
}

/// Combined EMD-ANN against EMD-Custom thresholding, per noise kind.
inline EvalReport run_table4(BenchContext& ctx) {
  const auto& cfg = ctx.config();
  const auto& snrs = cfg.train.snr_set;
  EvalReport report;
  for (NoiseKind kind : {NoiseKind::white, NoiseKind::pink}) {
    const std::string kname(to_string(kind));
    for (double snr : snrs) {
      const auto& tests = ctx.test_set(kind, snr);
      const auto ann = evaluate(AnnMethod{&ctx.model({kind}, snrs)}, tests, cfg.c_const);
      report.rows.push_back(
          detail::make_row(ctx, "table4", "EMD-ANN", kname, kind, snr_set_label(snrs), snr, ann, cfg.trials));
      const auto custom = evaluate(ThresholdRule{cfg.custom}, tests, cfg.c_const);
      report.rows.push_back(detail::make_row(ctx, "table4", "EMD-Custom", "none", kind, "", snr, custom, cfg.trials));
    }
  }
  report.sort();
  return report;
}

/// Combined models of the sweep spec, each tested across the SNR grid.
inline EvalReport run_sweep(BenchContext& ctx) {
  const auto& cfg = ctx.config();
  const auto& snrs = cfg.train.snr_set;
  const int trials = cfg.sweep.trials;
  EvalReport report;
  for (double snr : sweep_grid(cfg.sweep)) {
    for (const auto& m : cfg.sweep.models) {
      const auto kinds = canonical_kinds(m.train_kinds);
      const auto& tests = ctx.test_set(m.test_kind, snr, trials);
      const auto cell = evaluate(AnnMethod{&ctx.model(kinds, snrs)}, tests, cfg.c_const);
      report.rows.push_back(detail::make_row(ctx, "sweep", "EMD-ANN", kinds_label(kinds), m.test_kind,
                                             snr_set_label(snrs), snr, cell, trials));
    }
    // Off-table SNRs are not needed again; keep memory flat.
    if (std::ranges::find(snrs, snr) == snrs.end())
      for (NoiseKind k : {NoiseKind::white, NoiseKind::pink}) ctx.drop_test_set(k, snr, trials);
  }
  report.sort();
  return report;
}

}  // namespace lsden
