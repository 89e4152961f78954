#include <gtest/gtest.h>

#include <filesystem>

#include "lsden/bench.hpp"

using namespace lsden;
namespace fs = std::filesystem;

namespace {

// Small enough to train in seconds; the protocol is the same as full size.
BenchConfig tiny_config() {
  BenchConfig cfg;
  cfg.cycles = 4;
  cfg.train_cycles = 3;
  cfg.breath.cycle_seconds = 0.5;
  cfg.train.epochs = 5;
  cfg.train.block_rows = 512;
  cfg.trials = 1;
  cfg.sweep.snr_min = -2.0;
  cfg.sweep.snr_max = 2.0;
  cfg.sweep.step = 2.0;
  cfg.sweep.trials = 1;
  return cfg;
}

}  // namespace

TEST(SweepGrid, CountsSteps) {
  SweepSpec s;
  const auto g = sweep_grid(s);
  ASSERT_EQ(g.size(), 23u);
  EXPECT_EQ(g.front(), -2.0);
  EXPECT_EQ(g.back(), 20.0);
  s.step = 0.1;
  EXPECT_EQ(sweep_grid(s).size(), 221u);
  s.step = 0.0;
  EXPECT_THROW(sweep_grid(s), Error);
  s = {};
  s.snr_min = 30.0;
  EXPECT_THROW(sweep_grid(s), Error);
}

TEST(Config, Validation) {
  auto cfg = tiny_config();
  cfg.train_cycles = cfg.cycles;
  EXPECT_THROW(BenchContext{cfg}, Error);
  cfg = tiny_config();
  cfg.trials = 0;
  EXPECT_THROW(BenchContext{cfg}, Error);
}

TEST(Reference, PublishedCells) {
  EXPECT_EQ(published_reference("table3", "IND-M", NoiseKind::white, 0.0)->snr, 10.22);
  EXPECT_EQ(published_reference("table3", "COM-M", NoiseKind::white, 0.0)->snr, 9.41);
  EXPECT_EQ(published_reference("table4", "EMD-Custom", NoiseKind::white, 0.0)->snr, 5.89);
  EXPECT_EQ(published_reference("table4", "EMD-ANN", NoiseKind::pink, 0.0)->snr, 8.23);
  EXPECT_EQ(published_reference("table4", "EMD-Custom", NoiseKind::pink, 0.0)->snr, 4.31);
  EXPECT_EQ(published_reference("table4", "EMD-Custom", NoiseKind::pink, 20.0)->fit, 96.95);
  EXPECT_FALSE(published_reference("table4", "EMD-ANN", NoiseKind::white, 7.0));
  EXPECT_FALSE(published_reference("sweep", "EMD-ANN", NoiseKind::white, 0.0));
}

TEST(Dataset, FilteringMatchesDirectConstruction) {
  const auto cfg = tiny_config();
  const auto corpus = make_corpus(cfg);
  const auto train = std::span(corpus).first(cfg.train_cycles);
  const std::vector<NoiseKind> both{NoiseKind::white, NoiseKind::pink};
  const auto all = make_dataset(train, model_train_spec(cfg, both, cfg.train.snr_set), cfg.sift);
  const std::vector<NoiseKind> pink{NoiseKind::pink};
  const std::vector<double> five{5.0};
  const auto direct = make_dataset(train, model_train_spec(cfg, pink, five), cfg.sift);
  const auto filtered =
      all.filtered([](const RowOrigin& o) { return o.kind == NoiseKind::pink && o.snr_db == 5.0; });
  ASSERT_EQ(direct.rows(), filtered.rows());
  for (std::size_t r = 0; r < direct.rows(); ++r) {
    ASSERT_TRUE(std::ranges::equal(direct.row(r), filtered.row(r)));
    ASSERT_EQ(direct.target(r), filtered.target(r));
  }
}

TEST(Report, EmptyCsvIsHeaderOnly) {
  const auto csv = report_csv(EvalReport{});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  EXPECT_EQ(csv.rfind("experiment,method,", 0), 0u);
}

TEST(Report, JsonRoundTrip) {
  EvalReport r;
  r.rows.push_back({"table4", "EMD-ANN", "white", "white", "0;5", 0.0, 0.1234567890123, 9.87654321, 88.5, 7, 3,
                    9.41, 87.22});
  r.rows.push_back({"sweep", "EMD-ANN", "white-pink", "pink", "0;5", -2.0, -1.5, 6.25, 70.0, 7, 3});
  EXPECT_EQ(parse_report_json(report_json(r).dump()), r);
  EXPECT_THROW(parse_report_json("{\"rows\": [{\"method\": 1}]}"), Error);
  EXPECT_THROW(parse_report_json("not json"), Error);
}

TEST(Runner, TablesHaveProtocolShape) {
  BenchContext ctx(tiny_config());
  const auto t3 = run_table3(ctx);
  EXPECT_EQ(t3.rows.size(), 20u);
  const auto t4 = run_table4(ctx);
  EXPECT_EQ(t4.rows.size(), 20u);
  const auto sw = run_sweep(ctx);
  EXPECT_EQ(sw.rows.size(), 3u * 4u);

  // COM-M in table 3 and EMD-ANN in table 4 are the same model on the same draws.
  for (NoiseKind k : {NoiseKind::white, NoiseKind::pink}) {
    const std::string name(to_string(k));
    for (double snr : ctx.config().train.snr_set) {
      const auto* com = t3.find("COM-M", name, name, snr);
      const auto* ann = t4.find("EMD-ANN", name, name, snr);
      ASSERT_TRUE(com && ann);
      EXPECT_EQ(com->out_snr, ann->out_snr);
      EXPECT_EQ(com->in_snr, ann->in_snr);
      ASSERT_TRUE(t4.find("EMD-Custom", "none", name, snr));
    }
  }
  // Sorted, and the reference columns are filled where published.
  auto sorted = t4;
  sorted.sort();
  EXPECT_EQ(sorted, t4);
  EXPECT_EQ(t4.find("EMD-ANN", "white", "white", 0.0)->reference_out_snr, 9.41);
}

TEST(Runner, DeterministicAcrossContexts) {
  const auto cfg = tiny_config();
  BenchContext a(cfg), b(cfg);
  EXPECT_EQ(report_csv(run_table4(a)), report_csv(run_table4(b)));
}

TEST(Runner, ExportWritesBothFormats) {
  BenchContext ctx(tiny_config());
  const auto report = run_table4(ctx);
  const auto dir = fs::temp_directory_path() / "lsden_bench_export";
  export_report(report, dir, "table4");
  const auto csv = read_file(dir / "table4.csv");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), report.rows.size() + 1);
  EXPECT_EQ(parse_report_json(read_file(dir / "table4.json")), report);
  fs::remove_all(dir);
}

TEST(Evaluate, CustomMatchesStandaloneDenoiser) {
  const auto cfg = tiny_config();
  BenchContext ctx(cfg);
  const auto& tests = ctx.test_set(NoiseKind::white, 5.0);
  ASSERT_EQ(tests.size(), 1u);
  const auto cell = evaluate(ThresholdRule{cfg.custom}, tests, cfg.c_const);

  // Rebuild the same noisy cycle and run the public denoiser on it.
  const auto& clean = ctx.corpus()[3];
  const auto mix =
      contaminate(clean, noise_for(NoiseKind::white, 5.0, test_seed(cfg, 0, 3, NoiseKind::white, 5.0), 1.0));
  const auto out = denoise_emd_threshold_normalized(mix.noisy, cfg.sift, cfg.custom, cfg.c_const);
  const auto clean_n = apply_affine(clean.samples, out.affine);
  EXPECT_EQ(cell.out_snr, snr_db(clean_n, out.normalized.samples));
}
