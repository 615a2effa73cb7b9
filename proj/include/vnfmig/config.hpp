#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vnfmig/simulation.hpp"
#include "vnfmig/trajectory.hpp"

namespace vnfmig {

/// Bad flags, bad config keys/values, missing checkpoints (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input data (exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BenchSettings {
  std::vector<double> po_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> pv_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int n_seeds = 10;
};

/// Everything a run needs, file-loadable as dotted key = value lines.
struct ExperimentConfig {
  SimConfig sim;
  PipelineConfig pipe;
  BenchSettings bench;
  std::uint64_t seed = 1;
};

namespace detail {

inline double cfg_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: '" + value + "'");
  }
}

inline long cfg_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not an integer: '" + value + "'");
  }
}

inline bool cfg_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key " + key + ": not a boolean: '" + value + "'");
}

inline std::vector<std::string> cfg_split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, sep)) {
    std::size_t a = item.find_first_not_of(" \t");
    std::size_t b = item.find_last_not_of(" \t");
    out.push_back(a == std::string::npos ? "" : item.substr(a, b - a + 1));
  }
  return out;
}

inline std::vector<double> cfg_double_list(const std::string& key,
                                           const std::string& value, char sep = ',') {
  std::vector<double> out;
  for (const auto& item : cfg_split(value, sep))
    if (!item.empty()) out.push_back(cfg_double(key, item));
  if (out.empty()) throw ConfigError("config key " + key + ": empty list");
  return out;
}

}  // namespace detail

/// Set one dotted key. Unknown keys are rejected; chain.states must precede
/// chain.rows / chain.outage_states / chain.initial_state when resizing.
inline void apply_config_value(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
  using detail::cfg_bool;
  using detail::cfg_double;
  using detail::cfg_double_list;
  using detail::cfg_int;
  using detail::cfg_split;

  if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(cfg_int(key, value));
  } else if (key == "econ.loss_rate") {
    cfg.sim.econ.loss_rate = cfg_double(key, value);
  } else if (key == "econ.migration_cost") {
    cfg.sim.econ.migration_cost = cfg_double(key, value);
  } else if (key == "econ.sync_cost") {
    cfg.sim.econ.sync_cost = cfg_double(key, value);
  } else if (key == "econ.interval_steps") {
    cfg.sim.econ.interval_steps = static_cast<int>(cfg_int(key, value));
  } else if (key == "sim.region_side") {
    cfg.sim.region_side = cfg_double(key, value);
  } else if (key == "sim.ec_center_x") {
    cfg.sim.ec.center_x = cfg_double(key, value);
  } else if (key == "sim.ec_center_y") {
    cfg.sim.ec.center_y = cfg_double(key, value);
  } else if (key == "sim.ec_radius") {
    cfg.sim.ec.radius = cfg_double(key, value);
  } else if (key == "sim.population") {
    cfg.sim.population = static_cast<int>(cfg_int(key, value));
  } else if (key == "sim.step_seconds") {
    cfg.sim.step_seconds = cfg_double(key, value);
  } else if (key == "sim.preconvergence_steps") {
    cfg.sim.preconvergence_steps = static_cast<int>(cfg_int(key, value));
  } else if (key == "sim.training_steps") {
    cfg.sim.training_steps = static_cast<int>(cfg_int(key, value));
  } else if (key == "sim.evaluation_steps") {
    cfg.sim.evaluation_steps = static_cast<int>(cfg_int(key, value));
  } else if (key == "sim.n_rollouts") {
    cfg.sim.n_rollouts = static_cast<int>(cfg_int(key, value));
  } else if (key == "sim.candidate_percentile") {
    cfg.sim.candidate_percentile = cfg_double(key, value);
  } else if (key == "sim.candidate_margin_factor") {
    cfg.sim.candidate_margin_factor = cfg_double(key, value);
  } else if (key == "sim.visit_reducer") {
    if (value == "complement_product") cfg.sim.reducer = VisitReducer::complement_product;
    else if (value == "sum") cfg.sim.reducer = VisitReducer::sum;
    else if (value == "max") cfg.sim.reducer = VisitReducer::max;
    else throw ConfigError("config key sim.visit_reducer: unknown reducer '" + value + "'");
  } else if (key == "sim.kernels") {
    std::vector<KernelSpec> kernels;
    for (const auto& part : cfg_split(value, ';')) {
      if (part.empty()) continue;
      auto nums = cfg_double_list(key, part);
      if (nums.size() != 5)
        throw ConfigError("config key sim.kernels: each kernel needs 5 numbers");
      kernels.push_back({nums[0], nums[1], nums[2], nums[3], nums[4]});
    }
    if (kernels.empty()) throw ConfigError("config key sim.kernels: empty bank");
    cfg.sim.kernels = std::move(kernels);
  } else if (key == "chain.states") {
    auto names = cfg_split(value, ',');
    if (names.size() < 2) throw ConfigError("config key chain.states: need >= 2 states");
    cfg.sim.chain.state_names = names;
    cfg.sim.chain.transitions =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(names.size()),
                              static_cast<Eigen::Index>(names.size()));
    cfg.sim.chain.outage_states.clear();
    cfg.sim.chain.current_state = 0;
  } else if (key == "chain.rows") {
    const int n = cfg.sim.chain.size();
    auto rows = cfg_split(value, ';');
    if (static_cast<int>(rows.size()) != n)
      throw ConfigError("config key chain.rows: expected " + std::to_string(n) + " rows");
    for (int r = 0; r < n; ++r) {
      std::vector<double> entries;
      for (const auto& tok : cfg_split(rows[static_cast<std::size_t>(r)], ' '))
        if (!tok.empty()) entries.push_back(cfg_double(key, tok));
      if (static_cast<int>(entries.size()) != n)
        throw ConfigError("config key chain.rows: row " + std::to_string(r) +
                          " needs " + std::to_string(n) + " entries");
      for (int c = 0; c < n; ++c) cfg.sim.chain.transitions(r, c) = entries[static_cast<std::size_t>(c)];
    }
  } else if (key == "chain.outage_states") {
    cfg.sim.chain.outage_states.clear();
    for (const auto& name : cfg_split(value, ',')) {
      auto it = std::find(cfg.sim.chain.state_names.begin(),
                          cfg.sim.chain.state_names.end(), name);
      if (it == cfg.sim.chain.state_names.end())
        throw ConfigError("config key chain.outage_states: unknown state '" + name + "'");
      cfg.sim.chain.outage_states.push_back(
          static_cast<int>(it - cfg.sim.chain.state_names.begin()));
    }
  } else if (key == "chain.initial_state") {
    auto it = std::find(cfg.sim.chain.state_names.begin(),
                        cfg.sim.chain.state_names.end(), value);
    if (it == cfg.sim.chain.state_names.end())
      throw ConfigError("config key chain.initial_state: unknown state '" + value + "'");
    cfg.sim.chain.current_state =
        static_cast<int>(it - cfg.sim.chain.state_names.begin());
  } else if (key == "mdn.components") {
    cfg.sim.mdn_components = static_cast<int>(cfg_int(key, value));
  } else if (key == "mdn.learning_rate") {
    cfg.sim.mdn_learning_rate = cfg_double(key, value);
  } else if (key == "mdn.epochs") {
    cfg.sim.mdn_epochs = static_cast<int>(cfg_int(key, value));
  } else if (key == "mdn.batch_size") {
    cfg.sim.mdn_batch = static_cast<int>(cfg_int(key, value));
  } else if (key == "mdn.max_train_windows") {
    cfg.sim.mdn_max_train_windows = static_cast<int>(cfg_int(key, value));
  } else if (key == "mdn.online_update") {
    cfg.sim.mdn_online_update = cfg_bool(key, value);
  } else if (key == "pipe.resample_interval_s") {
    cfg.pipe.resample_interval_s = cfg_double(key, value);
  } else if (key == "pipe.gap_factor") {
    cfg.pipe.gap_factor = cfg_double(key, value);
  } else if (key == "pipe.speed_vmax_mps") {
    cfg.pipe.speed.vmax_mps = cfg_double(key, value);
  } else if (key == "pipe.speed_percentile") {
    cfg.pipe.speed.percentile = cfg_double(key, value);
  } else if (key == "pipe.stationarity_mean_factor") {
    cfg.pipe.stationarity.mean_factor = cfg_double(key, value);
  } else if (key == "pipe.stationarity_var_low") {
    cfg.pipe.stationarity.var_ratio_low = cfg_double(key, value);
  } else if (key == "pipe.stationarity_var_high") {
    cfg.pipe.stationarity.var_ratio_high = cfg_double(key, value);
  } else if (key == "pipe.stationarity_target") {
    cfg.pipe.stationarity.target_pass_rate = cfg_double(key, value);
  } else if (key == "pipe.min_split_samples") {
    cfg.pipe.stationarity.min_samples = static_cast<int>(cfg_int(key, value));
  } else if (key == "bench.po_grid") {
    cfg.bench.po_grid = cfg_double_list(key, value);
  } else if (key == "bench.pv_grid") {
    cfg.bench.pv_grid = cfg_double_list(key, value);
  } else if (key == "bench.seeds") {
    cfg.bench.n_seeds = static_cast<int>(cfg_int(key, value));
    if (cfg.bench.n_seeds < 1) throw ConfigError("config key bench.seeds: must be >= 1");
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

/// Parse a config file: 'key = value' lines, '#' comments, blank lines.
inline ExperimentConfig load_config_file(const std::string& path,
                                         ExperimentConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    auto strip = [](std::string s) {
      std::size_t x = s.find_first_not_of(" \t\r");
      std::size_t y = s.find_last_not_of(" \t\r");
      return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
    };
    std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    apply_config_value(base, key, value);
  }
  return base;
}

struct ConfigKeyDoc {
  const char* key;
  const char* default_value;
  const char* doc;
};

/// One entry per accepted key; the unit tests check that applying each
/// default reproduces the built-in configuration.
inline const std::vector<ConfigKeyDoc>& config_key_docs() {
  static const std::vector<ConfigKeyDoc> docs = {
      {"seed", "1", "master seed; every random stream derives from it"},
      {"econ.loss_rate", "1", "loss per subscriber per outage-exposed step (l)"},
      {"econ.migration_cost", "10", "cost of one VNF migration (c_NF)"},
      {"econ.sync_cost", "0.5", "cost of one profile synchronization (c_SP)"},
      {"econ.interval_steps", "30", "synchronization interval length T, in steps"},
      {"sim.region_side", "8000", "square region side, meters"},
      {"sim.ec_center_x", "4000", "EC disc center x, meters"},
      {"sim.ec_center_y", "4000", "EC disc center y, meters"},
      {"sim.ec_radius", "2000", "EC disc radius, meters"},
      {"sim.population", "1000", "constant user count"},
      {"sim.step_seconds", "60", "wall-clock length of one motion step"},
      {"sim.preconvergence_steps", "250", "steps before anything is recorded"},
      {"sim.training_steps", "500", "steps observed to fit the mobility model"},
      {"sim.evaluation_steps", "4000",
       "steps of the scored phase (rounded down to whole intervals)"},
      {"sim.n_rollouts", "100", "Monte-Carlo rollouts per user per interval"},
      {"sim.candidate_percentile", "0.99",
       "kernel step-length percentile bounding per-step travel"},
      {"sim.candidate_margin_factor", "1",
       "scales the candidate radius ec_radius + factor*T*v_cap"},
      {"sim.visit_reducer", "complement_product",
       "baseline visit score: complement_product, sum, or max"},
      {"sim.kernels",
       "55,0,25,25,0; -40,40,30,20,0.2; 0,-60,20,30,-0.2; -50,-35,25,25,0; "
       "30,50,35,25,0.1; 8,-5,45,45,0",
       "ground-truth step kernels: mean_x,mean_y,sigma_x,sigma_y,rho; ..."},
      {"chain.states", "normal,degraded,outage,repairing",
       "reliability chain state names (set before rows/outage/initial)"},
      {"chain.rows",
       "0.948 0.05 0.002 0; 0.6 0.2 0.2 0; 0 0 0.5 0.5; 0.7 0 0 0.3",
       "row-stochastic transition matrix, rows ';'-separated"},
      {"chain.outage_states", "outage", "states that count as an outage"},
      {"chain.initial_state", "normal", "chain state when evaluation starts"},
      {"mdn.components", "2", "bivariate Gaussian components I"},
      {"mdn.learning_rate", "0.001", "RMSprop learning rate"},
      {"mdn.epochs", "15", "training epochs"},
      {"mdn.batch_size", "512", "minibatch size (clamped to the dataset)"},
      {"mdn.max_train_windows", "16384",
       "cap on in-run training windows (seeded reservoir)"},
      {"mdn.online_update", "true",
       "one RMSprop step per interval on newly observed windows"},
      {"pipe.resample_interval_s", "60", "uniform resampling interval, seconds"},
      {"pipe.gap_factor", "5",
       "split trajectories at time gaps wider than factor*interval"},
      {"pipe.speed_vmax_mps", "2.5", "pedestrian speed cut, meters per second"},
      {"pipe.speed_percentile", "0.95", "percentile the speed cut applies to"},
      {"pipe.stationarity_mean_factor", "0.5",
       "split-half mean gap limit, in pooled standard deviations"},
      {"pipe.stationarity_var_low", "0.5", "split-half variance ratio lower bound"},
      {"pipe.stationarity_var_high", "2", "split-half variance ratio upper bound"},
      {"pipe.stationarity_target", "0.92", "required fraction of passing segments"},
      {"pipe.min_split_samples", "64", "smallest segment a split may produce"},
      {"bench.po_grid", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
       "P_o thresholds for the benchmark sweep"},
      {"bench.pv_grid", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
       "P_v thresholds for the benchmark sweep"},
      {"bench.seeds", "10", "seed count; run i uses seed + i"},
  };
  return docs;
}

/// The desk-scale preset: laptop-sized population, evaluation window and
/// rollout budget; everything else keeps the full-scale defaults.
inline void apply_desk_scale(ExperimentConfig& cfg) {
  cfg.sim = cfg.sim.desk_scale();
}

}  // namespace vnfmig
