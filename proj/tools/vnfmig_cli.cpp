// Experiment driver: preprocess GPS trajectories, train the mobility model,
// run migration simulations and benchmark the double-threshold baseline.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "vnfmig/config.hpp"
#include "vnfmig/mdn.hpp"
#include "vnfmig/simulation.hpp"
#include "vnfmig/trajectory.hpp"

namespace {

using namespace vnfmig;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool desk_scale = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_desk = false) {
  cmd->add_option("--config", args.config_path, "experiment config file");
  cmd->add_option("--set", args.overrides,
                  "override one config key, e.g. --set sim.population=200");
  cmd->add_option("--seed", args.seed, "master seed (overrides the config)")
      ->each([&](const std::string&) { args.seed_given = true; });
  if (with_desk)
    cmd->add_flag("--desk-scale", args.desk_scale,
                  "laptop preset: 200 users, 1000 evaluation steps, 32 rollouts, "
                  "slow-dynamics reliability chain");
}

ExperimentConfig resolve_config(const CommonArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_path.empty()) cfg = load_config_file(args.config_path);
  if (args.desk_scale) apply_desk_scale(cfg);
  for (const auto& pair : args.overrides) {
    auto eq = pair.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + pair + "'");
    apply_config_value(cfg, pair.substr(0, eq), pair.substr(eq + 1));
  }
  if (args.seed_given) cfg.seed = args.seed;
  return cfg;
}

std::string config_docs_footer() {
  std::string out = "Config keys (defaults in parentheses):\n";
  for (const auto& doc : config_key_docs()) {
    out += "  ";
    out += doc.key;
    out += " (";
    out += doc.default_value;
    out += ") - ";
    out += doc.doc;
    out += "\n";
  }
  return out;
}

void write_loss_csv(const std::string& path, const TrainReport& report) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write loss csv: " + path);
  os << "epoch,train_nll,val_nll\n";
  char buf[96];
  for (std::size_t e = 0; e < report.train_nll.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e, report.train_nll[e],
                  report.val_nll[e]);
    os << buf;
  }
}

int cmd_preprocess(const CommonArgs& common, const std::string& input_dir,
                   const std::string& out_path) {
  ExperimentConfig cfg = resolve_config(common);
  PipelineResult result;
  try {
    result = run_pipeline(input_dir, cfg.pipe);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  const auto& s = result.stats;
  std::printf("files: %d parsed of %d seen\n", s.files_parsed, s.files_seen);
  std::printf("records: %d total, %d skipped\n", s.records_total, s.records_skipped);
  std::printf("trajectories: %d raw, %d after resampling\n", s.raw_trajectories,
              s.resampled_segments);
  std::printf("speed filter dropped: %d\n", s.speed_dropped);
  std::printf("stationarity: %d emitted, %d passed (rate %.4f)\n",
              s.stationarity_emitted, s.stationarity_passed,
              s.stationarity_pass_rate());
  std::printf("final segments: %d (%lld windows)\n", s.final_segments,
              static_cast<long long>(s.total_windows));
  if (result.segments.empty()) throw DataError("no trajectories found");

  save_dataset(out_path, result.segments);
  nlohmann::json manifest{
      {"input_dir", input_dir},
      {"files_seen", s.files_seen},
      {"files_parsed", s.files_parsed},
      {"records_total", s.records_total},
      {"records_skipped", s.records_skipped},
      {"raw_trajectories", s.raw_trajectories},
      {"resampled_segments", s.resampled_segments},
      {"speed_dropped", s.speed_dropped},
      {"stationarity_emitted", s.stationarity_emitted},
      {"stationarity_passed", s.stationarity_passed},
      {"stationarity_pass_rate", s.stationarity_pass_rate()},
      {"short_dropped", s.short_dropped},
      {"final_segments", s.final_segments},
      {"total_windows", static_cast<long long>(s.total_windows)},
  };
  std::ofstream ms(out_path + ".manifest.json");
  if (!ms) throw DataError("cannot write manifest for " + out_path);
  ms << manifest.dump(2) << '\n';
  std::printf("dataset written to %s\n", out_path.c_str());
  return kExitOk;
}

int cmd_train(const CommonArgs& common, const std::string& dataset_path,
              const std::string& out_path, const std::string& losses_path,
              int epochs_override) {
  ExperimentConfig cfg = resolve_config(common);
  std::vector<TrajectorySegment> segments;
  try {
    segments = load_dataset(dataset_path);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  if (segments.empty()) throw DataError("dataset is empty: " + dataset_path);

  DatasetSplit split = split_dataset(std::move(segments), 0.9, cfg.seed);
  TrainingData train_set = concat_windows(split.train);
  TrainingData val_set = concat_windows(split.validation);
  if (train_set.size() == 0) throw DataError("dataset yields no training windows");
  if (val_set.size() == 0) {
    val_set.X = train_set.X.topRows(1);
    val_set.Y = train_set.Y.topRows(1);
  }

  MdnModel model(2 * kWindowSamples, cfg.sim.mdn_hidden1, cfg.sim.mdn_hidden2,
                 cfg.sim.mdn_components, mix64(cfg.seed, 0x6d6f64656cULL));
  TrainOptions opts;
  opts.epochs = epochs_override >= 0 ? epochs_override : cfg.sim.mdn_epochs;
  opts.batch_size = cfg.sim.mdn_batch;
  opts.optimizer = RmspropConfig{cfg.sim.mdn_learning_rate, 0.9, 1e-8};
  opts.shuffle_seed = mix64(cfg.seed, 0x7368756646ULL);
  TrainReport report = train_mdn(model, train_set, val_set, opts);

  save_checkpoint(model, out_path);
  std::string lpath = losses_path.empty() ? out_path + ".losses.csv" : losses_path;
  write_loss_csv(lpath, report);
  std::printf("trained %d epochs on %lld windows (val %lld); final val_nll=%.6f\n",
              opts.epochs, static_cast<long long>(train_set.size()),
              static_cast<long long>(val_set.size()), report.val_nll.back());
  std::printf("checkpoint written to %s\n", out_path.c_str());
  return kExitOk;
}

int cmd_simulate(const CommonArgs& common, const std::string& checkpoint,
                 const std::string& controller, double po, double pv,
                 const std::string& out_path) {
  ExperimentConfig cfg = resolve_config(common);
  ControllerKind kind;
  if (controller == "optimal") kind = ControllerKind::optimal;
  else if (controller == "baseline") kind = ControllerKind::baseline;
  else throw ConfigError("--controller must be 'optimal' or 'baseline'");

  MdnModel model;
  bool have_model = false;
  if (!checkpoint.empty()) {
    try {
      model = load_checkpoint(checkpoint);
    } catch (const std::runtime_error& e) {
      throw DataError(e.what());
    }
    have_model = true;
  } else if (kind == ControllerKind::optimal) {
    throw ConfigError("the optimal controller needs --checkpoint");
  }

  SimSummary summary = run_simulation(cfg.sim, kind, cfg.seed, {po, pv},
                                      have_model ? &model : nullptr);
  std::ofstream os(out_path);
  if (!os) throw DataError("cannot write ledger csv: " + out_path);
  write_ledger_csv(os, summary);
  std::printf("total_loss=%.17g total_cost=%.17g total_sum=%.17g\n",
              summary.total_loss, summary.total_cost, summary.total());
  return kExitOk;
}

int cmd_benchmark(const CommonArgs& common, const std::string& checkpoint,
                  const std::string& out_path) {
  ExperimentConfig cfg = resolve_config(common);
  MdnModel model;
  bool have_model = false;
  if (!checkpoint.empty()) {
    try {
      model = load_checkpoint(checkpoint);
    } catch (const std::runtime_error& e) {
      throw DataError(e.what());
    }
    have_model = true;
  }
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.bench.n_seeds; ++i) seeds.push_back(cfg.seed + i);

  auto rows = benchmark_grid(cfg.sim, cfg.bench.po_grid, cfg.bench.pv_grid, seeds,
                             have_model ? &model : nullptr);
  std::ofstream os(out_path);
  if (!os) throw DataError("cannot write benchmark csv: " + out_path);
  write_benchmark_csv(os, rows);

  const BenchmarkRow* best = nullptr;
  for (const auto& row : rows)
    if (!row.is_optimal && (best == nullptr || row.mean_total < best->mean_total))
      best = &row;
  std::printf("optimal mean_total=%.6f\n", rows.back().mean_total);
  if (best)
    std::printf("best baseline P_o=%g P_v=%g mean_total=%.6f\n", best->p_o, best->p_v,
                best->mean_total);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-loss-optimal stateful VNF migration laboratory"};
  app.require_subcommand(1);
  app.footer(config_docs_footer());

  CommonArgs pre_args;
  std::string pre_input, pre_out = "dataset.csv";
  auto* pre = app.add_subcommand("preprocess", "parse and filter PLT trajectories");
  add_common(pre, pre_args);
  pre->add_option("--input", pre_input, "directory of .plt files")->required();
  pre->add_option("--out", pre_out, "output dataset path");

  CommonArgs train_args;
  std::string train_dataset, train_out = "mdn.ckpt", train_losses;
  int train_epochs = -1;
  auto* train = app.add_subcommand("train", "fit the mobility model on a dataset");
  add_common(train, train_args);
  train->add_option("--dataset", train_dataset, "preprocessed dataset")->required();
  train->add_option("--out", train_out, "checkpoint output path");
  train->add_option("--losses", train_losses, "per-epoch loss CSV (default <out>.losses.csv)");
  train->add_option("--epochs", train_epochs, "override mdn.epochs (0 = initial losses only)");

  CommonArgs sim_args;
  std::string sim_ckpt, sim_controller = "optimal", sim_out = "ledger.csv";
  double sim_po = 0.5, sim_pv = 0.5;
  auto* sim = app.add_subcommand("simulate", "run one migration experiment");
  add_common(sim, sim_args, true);
  sim->add_option("--checkpoint", sim_ckpt, "mobility model checkpoint");
  sim->add_option("--controller", sim_controller, "optimal | baseline");
  sim->add_option("--po", sim_po, "baseline outage threshold P_o");
  sim->add_option("--pv", sim_pv, "baseline visit threshold P_v");
  sim->add_option("--out", sim_out, "ledger CSV path");

  CommonArgs bench_args;
  std::string bench_ckpt, bench_out = "benchmark.csv";
  auto* bench = app.add_subcommand("benchmark", "threshold grid vs optimal controller");
  add_common(bench, bench_args, true);
  bench->add_option("--checkpoint", bench_ckpt, "mobility model checkpoint (optional)");
  bench->add_option("--out", bench_out, "summary CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (pre->parsed()) return cmd_preprocess(pre_args, pre_input, pre_out);
    if (train->parsed())
      return cmd_train(train_args, train_dataset, train_out, train_losses, train_epochs);
    if (sim->parsed())
      return cmd_simulate(sim_args, sim_ckpt, sim_controller, sim_po, sim_pv, sim_out);
    if (bench->parsed()) return cmd_benchmark(bench_args, bench_ckpt, bench_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
