#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lsden/lsden.hpp"

using namespace lsden;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;  // stdout and stderr together
};

Run run(const std::string& args) {
  const std::string cmd = std::string(LSDEN_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, "popen failed"};
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

// The CSV field of `column` in the first data row of `csv`.
std::string field(const std::string& csv, const std::string& line_prefix, std::size_t column) {
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(line_prefix, 0) != 0) continue;
    std::istringstream cells(line);
    std::string cell;
    for (std::size_t c = 0; std::getline(cells, cell, ','); ++c)
      if (c == column) return cell;
  }
  return "<missing>";
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "lsden_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "tiny.toml") << "# small benchmark\n"
                                         "cycles = 4\n"
                                         "train-cycles = 3\n"
                                         "cycle-seconds = 0.5\n"
                                         "epochs = 4\n"
                                         "block-rows = 512\n"
                                         "trials = 1\n"
                                         "sweep-min = 0\n"
                                         "sweep-max = 2\n"
                                         "sweep-step = 2\n"
                                         "sweep-trials = 1\n"
                                         "seed = 5\n";
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static std::string config() { return " --config " + path("tiny.toml"); }

  static inline fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpListsFlagsWithDefaults) {
  const auto bench = run("bench --help");
  EXPECT_EQ(bench.code, 0);
  for (const char* flag : {"--output", "--config", "--seed", "--structure", "--epochs", "--alpha", "--gamma-ratio",
                           "--c-const", "--sweep-min", "--trials"})
    EXPECT_NE(bench.out.find(flag), std::string::npos) << flag;
  EXPECT_NE(bench.out.find("ann5"), std::string::npos);
  EXPECT_NE(bench.out.find("300"), std::string::npos);

  const auto den = run("denoise --help");
  EXPECT_EQ(den.code, 0);
  for (const char* flag : {"--input", "--output", "--method", "--model", "--alpha", "--gamma-ratio", "--c-const"})
    EXPECT_NE(den.out.find(flag), std::string::npos) << flag;

  for (const char* sub : {"synth", "noise", "decompose", "train", "eval", "spectrogram"})
    EXPECT_EQ(run(std::string(sub) + " --help").code, 0) << sub;
}

TEST_F(Cli, MissingInputExitsWithTwo) {
  const auto missing = path("nope.wav");
  const auto r = run("denoise --method custom --input " + missing + " --output " + path("x.wav"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find(missing), std::string::npos);
  EXPECT_EQ(run("decompose --input " + missing).code, 2);
  EXPECT_EQ(run("bench --output " + path("b") + " --config " + path("absent.toml")).code, 2);
}

TEST_F(Cli, UsageErrorsAreReported) {
  EXPECT_NE(run("").code, 0);
  EXPECT_NE(run("denoise --method magic --input a --output b").code, 0);
  std::ofstream(path("bad.toml")) << "no-such-option = 3\n";
  const auto r = run("bench --output " + path("b") + " --config " + path("bad.toml"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("no-such-option"), std::string::npos);
}

TEST_F(Cli, SynthIsDeterministicAndReloads) {
  ASSERT_EQ(run("synth --output " + path("c1") + config()).code, 0);
  ASSERT_EQ(run("synth --output " + path("c2") + config()).code, 0);
  std::size_t wavs = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "c1")) {
    if (e.path().extension() != ".wav") continue;
    ++wavs;
    EXPECT_EQ(read_file(e.path()), read_file(dir_ / "c2" / e.path().filename()));
    const auto s = load_wav(e.path());
    EXPECT_EQ(s.sample_rate, 4000);
    EXPECT_EQ(s.size(), 2000u);
  }
  EXPECT_EQ(wavs, 4u);
  EXPECT_TRUE(fs::exists(dir_ / "c1" / "manifest.json"));
  const auto manifest = nlohmann::json::parse(read_file(dir_ / "c1" / "manifest.json"));
  EXPECT_EQ(manifest["files"].size(), 4u);
}

TEST_F(Cli, NoiseDecomposeDenoiseSpectrogram) {
  ASSERT_EQ(run("synth --output " + path("c3") + config()).code, 0);
  const auto clean = path("c3/cycle_000.wav");
  ASSERT_EQ(run("noise --input " + clean + " --output " + path("noisy.wav") + " --noise pink --snr 5 --seed 3").code,
            0);
  const auto a = load_wav(clean), b = load_wav(path("noisy.wav"));
  EXPECT_NEAR(snr_db(a.samples, b.samples), 5.0, 0.05);

  const auto d = run("decompose --input " + path("noisy.wav") + " --output " + path("imfs.txt"));
  ASSERT_EQ(d.code, 0);
  const auto imfs = std::stoul(d.out.substr(d.out.find("imfs ") + 5));
  EXPECT_GT(imfs, 2u);
  EXPECT_NE(d.out.find("columns " + std::to_string(imfs + 1)), std::string::npos);
  const double err = std::stod(d.out.substr(d.out.find("reconstruction_rel_error ") + 25));
  EXPECT_LT(err, 1e-8);

  for (const char* m : {"custom", "hard", "soft"}) {
    const auto r = run(std::string("denoise --method ") + m + " --input " + path("noisy.wav") + " --output " +
                       path(std::string("den_") + m + ".wav"));
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(load_wav(path(std::string("den_") + m + ".wav")).size(), a.size());
  }
  ASSERT_EQ(run("spectrogram --input " + path("noisy.wav") + " --output " + path("s.pgm")).code, 0);
  EXPECT_EQ(read_file(path("s.pgm")).rfind("P5\n", 0), 0u);
}

TEST_F(Cli, RampDecomposesToNothing) {
  Signal ramp{std::vector<double>(1000), 4000};
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp.samples[i] = -0.5 + static_cast<double>(i) / 1000.0;
  write_wav(ramp, path("ramp.wav"));
  const auto d = run("decompose --input " + path("ramp.wav"));
  EXPECT_EQ(d.code, 0);
  EXPECT_NE(d.out.find("imfs 0\n"), std::string::npos);
}

TEST_F(Cli, FlagsOverrideConfigFile) {
  ASSERT_EQ(run("train --noise white --output " + path("m_cfg.bin") + config()).code, 0);
  EXPECT_EQ(load_model(path("m_cfg.bin")).epochs_trained, 4u);
  ASSERT_EQ(run("train --noise white --epochs 2 --output " + path("m_flag.bin") + config()).code, 0);
  EXPECT_EQ(load_model(path("m_flag.bin")).epochs_trained, 2u);
}

TEST_F(Cli, PipelineReproducesBenchCells) {
  const auto out = path("bench");
  ASSERT_EQ(run("bench --output " + out + " --experiments table4" + config()).code, 0);
  const auto table = read_file(path("bench/table4.csv"));

  ASSERT_EQ(run("train --noise pink --output " + path("pink.bin") + config()).code, 0);
  const auto ann = run("eval --method ann --model " + path("pink.bin") + " --noise pink --snr 10" + config());
  ASSERT_EQ(ann.code, 0) << ann.out;
  const auto custom = run("eval --method custom --noise pink --snr 10" + config());
  ASSERT_EQ(custom.code, 0) << custom.out;

  // Columns: 6 in_snr, 7 out_snr, 8 fit_pct.
  for (std::size_t col : {6u, 7u, 8u}) {
    EXPECT_EQ(field(ann.out, "eval,EMD-ANN", col), field(table, "table4,EMD-ANN,pink,pink,0;5;10;15;20,10,", col));
    EXPECT_EQ(field(custom.out, "eval,EMD-Custom", col), field(table, "table4,EMD-Custom,none,pink,,10,", col));
  }

  // The trained model also drives the file-level denoiser.
  ASSERT_EQ(run("synth --output " + path("c4") + config()).code, 0);
  ASSERT_EQ(run("noise --input " + path("c4/cycle_003.wav") + " --output " + path("n4.wav") + " --snr 0").code, 0);
  const auto r = run("denoise --method ann --model " + path("pink.bin") + " --input " + path("n4.wav") +
                     " --output " + path("d4.wav"));
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST_F(Cli, BenchRerunIsByteIdentical) {
  ASSERT_EQ(run("bench --output " + path("r1") + config()).code, 0);
  ASSERT_EQ(run("bench --output " + path("r2") + config()).code, 0);
  for (const char* f : {"table3.csv", "table4.csv", "sweep.csv", "table3.json", "table4.json", "sweep.json"})
    EXPECT_EQ(read_file(dir_ / "r1" / f), read_file(dir_ / "r2" / f)) << f;
  const auto sweep = read_file(dir_ / "r1" / "sweep.csv");
  EXPECT_EQ(std::count(sweep.begin(), sweep.end(), '\n'), 1 + 2 * 4);
}
