// lsden: command-line front end for synthesis, contamination, decomposition,
// training, denoising and benchmarking.
//
// Every subcommand accepts --config FILE (TOML/INI). Top-level keys apply to
// any subcommand that has an option of that name; keys under [subcommand]
// apply to that subcommand only. Flags given on the command line win.
//
// Exit codes: 0 success, 1 failure, 2 missing input file, other non-zero
// values for usage errors. LSDEN_LOG=0|1|2 sets stderr verbosity.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "lsden/lsden.hpp"

namespace {

using namespace lsden;
namespace fs = std::filesystem;

int log_level() {
  static const int level = [] {
    const char* v = std::getenv("LSDEN_LOG");
    return v && *v ? std::atoi(v) : 1;
  }();
  return level;
}

void info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << msg << '\n';
}

void debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << msg << '\n';
}

struct Options {
  fs::path input;
  fs::path output;
  fs::path model;
  std::string config;
  std::uint64_t seed = 1;
  std::string method = "ann";
  std::vector<std::string> noise{"white"};
  double snr = 0.0;
  std::string structure = "ann5";
  std::string optimizer = "lm";
  std::string snr_set = "0,5,10,15,20";
  std::string experiments = "table3,table4,sweep";
  std::size_t window = 256;
  std::size_t hop = 128;
  BenchConfig bench;
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      require(item.find_first_not_of(" \t", used) == std::string::npos, Errc::invalid_argument, "");
    } catch (const std::exception&) {
      throw Error(Errc::invalid_argument, "bad number '" + item + "' in list '" + text + "'");
    }
  }
  require(!out.empty(), Errc::invalid_argument, "empty list");
  return out;
}

// ---------------------------------------------------------------------------
// Option groups

void add_common(CLI::App* app, Options& o) {
  app->add_option("--config", o.config, "TOML/INI file with option defaults");
  app->add_option("--seed", o.seed, "Master seed");
}

void add_corpus(CLI::App* app, Options& o) {
  auto& c = o.bench;
  app->add_option("--cycles", c.cycles, "Synthetic breath cycles in the corpus")->group("Corpus");
  app->add_option("--train-cycles", c.train_cycles, "Leading cycles used for training")->group("Corpus");
  app->add_option("--rate", c.sample_rate, "Sample rate in Hz")->group("Corpus");
  app->add_option("--cycle-seconds", c.breath.cycle_seconds, "Cycle length in seconds")->group("Corpus");
  app->add_option("--inhale-fraction", c.breath.inhale_fraction, "Inhale share of the cycle")->group("Corpus");
  app->add_option("--band-low", c.breath.band_low, "Lower edge of the breath band in Hz")->group("Corpus");
  app->add_option("--band-high", c.breath.band_high, "Upper edge of the breath band in Hz")->group("Corpus");
  app->add_option("--exhale-gain", c.breath.exhale_gain, "Exhale amplitude relative to inhale")->group("Corpus");
  app->add_option("--breath-exponent", c.breath.spectral_exponent, "Breath spectrum falls as 1/f^x")
      ->group("Corpus");
}

void add_sift(CLI::App* app, Options& o) {
  auto& s = o.bench.sift;
  app->add_option("--sd-threshold", s.sd_threshold, "Sifting stop threshold")->group("EMD");
  app->add_option("--max-sift-iters", s.max_sift_iters, "Sifting rounds per IMF before the SD test is dropped")
      ->group("EMD");
  app->add_option("--max-imfs", s.max_imfs, "Maximum IMFs per decomposition")->group("EMD");
}

void add_train(CLI::App* app, Options& o) {
  auto& t = o.bench.train;
  app->add_option("--structure", o.structure, "Network structure")
      ->check(CLI::IsMember({"ann1", "ann2", "ann3", "ann4", "ann5", "ann6", "ann7", "ann8", "ann9"}))
      ->group("Training");
  app->add_option("--epochs", t.epochs, "Training epochs")->group("Training");
  app->add_option("--block-rows", t.block_rows, "Rows per training step")->group("Training");
  app->add_option("--lambda0", t.lm_lambda0, "Initial LM damping")->group("Training");
  app->add_option("--optimizer", o.optimizer, "lm or gd")->check(CLI::IsMember({"lm", "gd"}))->group("Training");
  app->add_option("--gd-step", t.gd_step, "Gradient-descent step size")->group("Training");
  app->add_option("--snr-set", o.snr_set, "Training SNRs in dB, comma separated")->group("Training");
  app->add_option("--pink-alpha", t.pink_alpha, "Spectral exponent of pink noise")->group("Training");
}

void add_threshold(CLI::App* app, Options& o) {
  app->add_option("--alpha", o.bench.custom.alpha, "Custom-threshold alpha")->group("Thresholding");
  app->add_option("--gamma-ratio", o.bench.custom.gamma_ratio, "Custom-threshold gamma / tau")
      ->group("Thresholding");
  app->add_option("--c-const", o.bench.c_const, "Universal-threshold constant C")->group("Thresholding");
}

void add_eval(CLI::App* app, Options& o) {
  app->add_option("--trials", o.bench.trials, "Noise draws per test cycle")->group("Evaluation");
}

void add_sweep(CLI::App* app, Options& o) {
  auto& s = o.bench.sweep;
  app->add_option("--sweep-min", s.snr_min, "Lowest sweep SNR in dB")->group("Sweep");
  app->add_option("--sweep-max", s.snr_max, "Highest sweep SNR in dB")->group("Sweep");
  app->add_option("--sweep-step", s.step, "Sweep step in dB")->group("Sweep");
  app->add_option("--sweep-trials", s.trials, "Noise draws per test cycle in the sweep")->group("Sweep");
}

void finalize(Options& o) {
  o.bench.seed = o.seed;
  o.bench.train.structure = ann_structure(parse_ann_id(o.structure));
  o.bench.train.optimizer = o.optimizer == "gd" ? Optimizer::gradient_descent : Optimizer::levenberg_marquardt;
  o.bench.train.snr_set = parse_list(o.snr_set);
  o.bench.train.seed = o.seed;
}

std::vector<NoiseKind> noise_kinds(const Options& o) {
  std::vector<NoiseKind> kinds;
  for (const auto& n : o.noise) kinds.push_back(parse_noise_kind(n));
  return canonical_kinds(kinds);
}

/// Scales a signal into [-1, 1] when it overflows, saying so.
Signal fit_headroom(Signal s, const std::string& what) {
  double peak = 0.0;
  for (double v : s.samples) peak = std::max(peak, std::abs(v));
  if (peak > 1.0) {
    const double k = 1.0 / peak;
    for (double& v : s.samples) v *= k;
    info(what + " peaked at " + format_number(peak) + "; rescaled by " + format_number(k) + " to fit 16-bit PCM");
  }
  return s;
}

std::string method_label(const std::string& method) {
  if (method == "ann") return "EMD-ANN";
  if (method == "custom") return "EMD-Custom";
  if (method == "hard") return "EMD-Hard";
  return "EMD-Soft";
}

ThresholdRule threshold_rule(const Options& o) {
  if (o.method == "hard") return HardThreshold{};
  if (o.method == "soft") return SoftThreshold{};
  return o.bench.custom;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_synth(const Options& o) {
  const auto corpus = make_corpus(o.bench);
  fs::create_directories(o.output);
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t c = 0; c < corpus.size(); ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "cycle_%03zu.wav", c);
    write_wav(corpus[c], o.output / name);
    files.push_back({{"file", name},
                     {"seed", derive_seed(o.bench.seed, kCorpusLabel, c)},
                     {"samples", corpus[c].size()},
                     {"role", c < o.bench.train_cycles ? "train" : "test"}});
  }
  const auto& b = o.bench.breath;
  const nlohmann::json manifest{{"seed", o.bench.seed},
                                {"sample_rate", o.bench.sample_rate},
                                {"cycle_seconds", b.cycle_seconds},
                                {"inhale_fraction", b.inhale_fraction},
                                {"band_low", b.band_low},
                                {"band_high", b.band_high},
                                {"exhale_gain", b.exhale_gain},
                                {"breath_exponent", b.spectral_exponent},
                                {"files", files}};
  const auto text = manifest.dump(2);
  atomic_write(o.output / "manifest.json", std::ios::out, [&](std::ostream& out) { out << text << '\n'; });
  info("wrote " + std::to_string(corpus.size()) + " cycles and manifest.json to " + o.output.string());
  return 0;
}

int cmd_noise(const Options& o) {
  const auto clean = load_wav(o.input);
  require(o.noise.size() == 1, Errc::invalid_argument, "noise takes exactly one --noise kind");
  const auto kind = parse_noise_kind(o.noise.front());
  const auto mix = contaminate(clean, noise_for(kind, o.snr, o.seed, o.bench.train.pink_alpha));
  write_wav(fit_headroom(mix.noisy, "noisy signal"), o.output);
  info("added " + std::string(to_string(kind)) + " noise at " + format_number(o.snr) + " dB");
  return 0;
}

int cmd_decompose(const Options& o) {
  const auto s = load_wav(o.input);
  const auto stack = decompose(s, o.bench.sift);
  const auto back = stack.reconstruct();
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    err += (back[i] - s.samples[i]) * (back[i] - s.samples[i]);
    ref += s.samples[i] * s.samples[i];
  }
  std::cout << "imfs " << stack.imfs.size() << '\n'
            << "columns " << stack.imfs.size() + 1 << '\n'
            << "reconstruction_rel_error " << (ref > 0.0 ? std::sqrt(err / ref) : std::sqrt(err)) << '\n';
  if (!o.output.empty()) write_imf_columns(stack, o.output);
  return 0;
}

int cmd_train(const Options& o) {
  const auto kinds = noise_kinds(o);
  const auto& snrs = o.bench.train.snr_set;
  const auto corpus = make_corpus(o.bench);
  const auto train = std::span(corpus).first(o.bench.train_cycles);
  info("building training rows (" + kinds_label(kinds) + ", " + snr_set_label(snrs) + " dB)");
  const auto data = make_dataset(train, model_train_spec(o.bench, kinds, snrs), o.bench.sift);
  for (const auto& w : data.warnings()) info(w);
  info("training on " + std::to_string(data.rows()) + " rows");
  const auto result = train_bench_model(o.bench, data, kinds, snrs);
  for (const auto& rec : result.history)
    debug("epoch " + std::to_string(rec.epoch) + " mse " + format_number(rec.loss_after) + " lambda " +
          format_number(rec.lambda));
  if (result.stalled) info("stopped early: " + result.diagnostic);
  save_model(result.model, o.output);
  info("saved model to " + o.output.string());
  return 0;
}

int cmd_denoise(const Options& o) {
  const auto noisy = load_wav(o.input);
  Signal out;
  if (o.method == "ann") {
    require(!o.model.empty(), Errc::invalid_argument, "--method ann needs --model");
    out = denoise_ann(noisy, load_model(o.model), o.bench.sift);
  } else {
    out = denoise_emd_threshold(noisy, o.bench.sift, threshold_rule(o), o.bench.c_const);
  }
  write_wav(fit_headroom(out, "denoised signal"), o.output);
  return 0;
}

int cmd_eval(const Options& o) {
  require(o.noise.size() == 1, Errc::invalid_argument, "eval takes exactly one --noise kind");
  const auto kind = parse_noise_kind(o.noise.front());
  std::optional<MlpModel> model;
  if (o.method == "ann") {
    require(!o.model.empty(), Errc::invalid_argument, "--method ann needs --model");
    model = load_model(o.model);
  }
  BenchContext ctx(o.bench, [](const std::string& m) { debug(m); });
  const auto& tests = ctx.test_set(kind, o.snr);
  const EvalMethod method = model ? EvalMethod{AnnMethod{&*model}} : EvalMethod{threshold_rule(o)};
  const auto cell = evaluate(method, tests, o.bench.c_const);
  EvalReport report;
  report.rows.push_back(ReportRow{"eval", method_label(o.method), model ? o.model.filename().string() : "none",
                                  std::string(to_string(kind)), model ? snr_set_label(o.bench.train.snr_set) : "",
                                  o.snr, cell.in_snr, cell.out_snr, cell.fit_pct, o.seed, o.bench.trials});
  const auto csv = report_csv(report);
  std::cout << csv;
  if (!o.output.empty()) atomic_write(o.output, std::ios::out, [&](std::ostream& out) { out << csv; });
  return 0;
}

int cmd_bench(const Options& o) {
  std::set<std::string> wanted;
  std::stringstream ss(o.experiments);
  for (std::string e; std::getline(ss, e, ',');) {
    require(e == "table3" || e == "table4" || e == "sweep", Errc::invalid_argument, "unknown experiment '" + e + "'");
    wanted.insert(e);
  }
  BenchContext ctx(o.bench, [](const std::string& m) { info(m); });
  // Fixed order so logs and caches behave the same on every run.
  for (const std::string name : {"table3", "table4", "sweep"}) {
    if (!wanted.contains(name)) continue;
    info("running " + name);
    const auto report = name == "table3" ? run_table3(ctx) : name == "table4" ? run_table4(ctx) : run_sweep(ctx);
    export_report(report, o.output, name);
    info("wrote " + (o.output / (name + ".csv")).string());
  }
  return 0;
}

int cmd_spectrogram(const Options& o) {
  const auto s = load_wav(o.input);
  const auto grid = spectrogram(s.samples, o.window, o.hop);
  if (o.output.extension() == ".pgm")
    write_spectrogram_pgm(grid, o.output);
  else
    write_spectrogram_text(grid, o.output);
  return 0;
}

// ---------------------------------------------------------------------------
// Config file

/// Reads --config from the raw arguments and splices its values in right
/// after the subcommand name, skipping keys the user passed as flags.
std::vector<std::string> splice_config(const CLI::App& app, std::vector<std::string> args) {
  std::size_t sub_pos = 0;
  const CLI::App* sub = nullptr;
  for (std::size_t i = 1; i < args.size() && !sub; ++i) {
    for (const auto* s : app.get_subcommands({}))
      if (s->get_name() == args[i]) {
        sub = s;
        sub_pos = i;
      }
  }
  if (!sub) return args;

  std::string path;
  std::set<std::string> given;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const auto eq = a.find('=');
    const auto name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    given.insert(name);
    if (name == "config") path = eq != std::string::npos ? a.substr(eq + 1) : (i + 1 < args.size() ? args[i + 1] : "");
  }
  if (path.empty()) return args;
  if (!fs::exists(path)) throw Error(Errc::file_not_found, path);

  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw Error(Errc::schema_error, path + ": " + e.what());
  }

  auto known_anywhere = [&](const std::string& name) {
    for (const auto* s : app.get_subcommands({}))
      if (s->get_option_no_throw("--" + name)) return true;
    return false;
  };

  std::map<std::string, std::vector<std::string>> values;  // section entries override top-level ones
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& item : items) {
      if (item.name == "++" || item.name == "--") continue;
      std::string name = item.name;
      std::ranges::replace(name, '_', '-');
      const bool top = item.parents.empty();
      const bool mine = item.parents.size() == 1 && item.parents[0] == sub->get_name();
      if ((pass == 0 && !top) || (pass == 1 && !mine)) continue;
      if (!top && !mine) continue;
      if (!sub->get_option_no_throw("--" + name)) {
        require(top && known_anywhere(name), Errc::schema_error,
                path + ": unknown key '" + item.fullname() + "'");
        continue;
      }
      if (name == "config") continue;
      values[name] = item.inputs;
    }
  }

  std::vector<std::string> injected;
  for (const auto& [name, inputs] : values) {
    if (given.contains(name)) continue;
    injected.push_back("--" + name);
    injected.insert(injected.end(), inputs.begin(), inputs.end());
    debug("config: " + name + " from " + path);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Lung-sound denoising with empirical mode decomposition", "lsden"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto* synth = app.add_subcommand("synth", "Write a synthetic breath corpus as WAV files plus a manifest");
  add_common(synth, o);
  synth->add_option("--output", o.output, "Output directory")->required();
  add_corpus(synth, o);

  auto* noise = app.add_subcommand("noise", "Contaminate a WAV file at a target SNR");
  add_common(noise, o);
  noise->add_option("--input", o.input, "Clean WAV")->required();
  noise->add_option("--output", o.output, "Noisy WAV")->required();
  noise->add_option("--noise", o.noise, "white or pink")->expected(1);
  noise->add_option("--snr", o.snr, "Target SNR in dB");
  noise->add_option("--pink-alpha", o.bench.train.pink_alpha, "Spectral exponent of pink noise");

  auto* dec = app.add_subcommand("decompose", "Decompose a WAV file into IMFs");
  add_common(dec, o);
  dec->add_option("--input", o.input, "Input WAV")->required();
  dec->add_option("--output", o.output, "Column file: one column per IMF, then the residue");
  add_sift(dec, o);

  auto* train = app.add_subcommand("train", "Train an EMD-ANN model on the synthetic corpus");
  add_common(train, o);
  train->add_option("--output", o.output, "Model file")->required();
  train->add_option("--noise", o.noise, "Training noise kinds (repeat for both)");
  add_corpus(train, o);
  add_sift(train, o);
  add_train(train, o);

  auto* den = app.add_subcommand("denoise", "Denoise a WAV file");
  add_common(den, o);
  den->add_option("--input", o.input, "Noisy WAV")->required();
  den->add_option("--output", o.output, "Denoised WAV")->required();
  den->add_option("--method", o.method, "Denoiser")->check(CLI::IsMember({"ann", "custom", "hard", "soft"}));
  den->add_option("--model", o.model, "Model file for --method ann");
  add_sift(den, o);
  add_threshold(den, o);

  auto* eval = app.add_subcommand("eval", "Score one method on one benchmark test condition");
  add_common(eval, o);
  eval->add_option("--method", o.method, "Denoiser")->check(CLI::IsMember({"ann", "custom", "hard", "soft"}));
  eval->add_option("--model", o.model, "Model file for --method ann");
  eval->add_option("--noise", o.noise, "Test noise kind")->expected(1);
  eval->add_option("--snr", o.snr, "Test SNR in dB");
  eval->add_option("--output", o.output, "Also write the CSV row here");
  add_corpus(eval, o);
  add_sift(eval, o);
  add_train(eval, o);
  add_threshold(eval, o);
  add_eval(eval, o);

  auto* bench = app.add_subcommand("bench", "Run the table and sweep experiments and write CSV/JSON reports");
  add_common(bench, o);
  bench->add_option("--output", o.output, "Report directory")->required();
  bench->add_option("--experiments", o.experiments, "Comma-separated subset of table3,table4,sweep");
  add_corpus(bench, o);
  add_sift(bench, o);
  add_train(bench, o);
  add_threshold(bench, o);
  add_eval(bench, o);
  add_sweep(bench, o);

  auto* spec = app.add_subcommand("spectrogram", "Short-time Fourier magnitudes of a WAV file");
  add_common(spec, o);
  spec->add_option("--input", o.input, "Input WAV")->required();
  spec->add_option("--output", o.output, "Output file (.pgm image, otherwise text)")->required();
  spec->add_option("--window", o.window, "Window length in samples");
  spec->add_option("--hop", o.hop, "Hop in samples");

  try {
    auto args = splice_config(app, std::vector<std::string>(argv, argv + argc));
    std::vector<std::string> rest(args.rbegin(), args.rend() - 1);  // CLI11 wants them reversed, minus argv[0]
    try {
      app.parse(rest);
    } catch (const CLI::ParseError& e) {
      return app.exit(e);
    }
    finalize(o);
    if (*synth) return cmd_synth(o);
    if (*noise) return cmd_noise(o);
    if (*dec) return cmd_decompose(o);
    if (*train) return cmd_train(o);
    if (*den) return cmd_denoise(o);
    if (*eval) return cmd_eval(o);
    if (*bench) return cmd_bench(o);
    if (*spec) return cmd_spectrogram(o);
  } catch (const Error& e) {
    std::cerr << "lsden: " << e.what() << '\n';
    return e.code() == Errc::file_not_found ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "lsden: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
