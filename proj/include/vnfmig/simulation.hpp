#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vnfmig/controller.hpp"
#include "vnfmig/economics.hpp"
#include "vnfmig/mdn.hpp"
#include "vnfmig/mobility.hpp"
#include "vnfmig/reliability.hpp"
#include "vnfmig/rng.hpp"
#include "vnfmig/trajectory.hpp"

namespace vnfmig {

/// Ground-truth per-step displacement distribution of one user class.
struct KernelSpec {
  double mean_x = 0.0, mean_y = 0.0;
  double sigma_x = 1.0, sigma_y = 1.0;
  double rho = 0.0;

  Eigen::Vector2d sample(Pcg32& rng) const {
    double z1 = rng.normal(), z2 = rng.normal();
    return {mean_x + sigma_x * z1,
            mean_y + sigma_y * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2)};
  }
};

/// Pedestrian-like kernel bank (meters per one-minute step): a few steady
/// headings plus one near-stationary wanderer.
inline std::vector<KernelSpec> default_kernel_bank() {
  return {{55.0, 0.0, 25.0, 25.0, 0.0},   {-40.0, 40.0, 30.0, 20.0, 0.2},
          {0.0, -60.0, 20.0, 30.0, -0.2}, {-50.0, -35.0, 25.0, 25.0, 0.0},
          {30.0, 50.0, 35.0, 25.0, 0.1},  {8.0, -5.0, 45.0, 45.0, 0.0}};
}

/// How per-step visit probabilities collapse to the baseline's "cumulative
/// probability of visiting" score.
enum class VisitReducer { complement_product, sum, max };

inline double reduce_visit_probability(const std::vector<double>& p_v,
                                       VisitReducer reducer) {
  switch (reducer) {
    case VisitReducer::complement_product: {
      double miss = 1.0;
      for (double p : p_v) miss *= 1.0 - p;
      return 1.0 - miss;
    }
    case VisitReducer::sum: {
      double s = 0.0;
      for (double p : p_v) s += p;
      return s;
    }
    case VisitReducer::max: {
      double m = 0.0;
      for (double p : p_v) m = std::max(m, p);
      return m;
    }
  }
  return 0.0;
}

struct SimConfig {
  double region_side = 8000.0;
  EcGeometry ec{4000.0, 4000.0, 2000.0};
  int population = 1000;
  double step_seconds = 60.0;
  int preconvergence_steps = 250;
  int training_steps = 500;
  int evaluation_steps = 4000;
  EconomicParams econ;  // includes the interval length T
  ReliabilityChain chain = ReliabilityChain::default_chain();
  int n_rollouts = 100;
  double candidate_percentile = 0.99;
  double candidate_margin_factor = 1.0;
  VisitReducer reducer = VisitReducer::complement_product;
  std::vector<KernelSpec> kernels = default_kernel_bank();

  // Controller-model knobs (hidden sizes are library-level; the experiment
  // file only exposes the mixture size and the optimizer settings).
  int mdn_components = 2;
  int mdn_hidden1 = 512;
  int mdn_hidden2 = 128;
  int mdn_window_samples = kWindowSamples;
  double mdn_learning_rate = 1e-3;
  int mdn_epochs = 15;
  int mdn_batch = 512;
  int mdn_max_train_windows = 16384;
  bool mdn_online_update = true;

  int eval_intervals() const { return evaluation_steps / econ.interval_steps; }

  void validate() const {
    econ.validate();
    chain.validate();
    if (region_side <= 0.0) throw std::invalid_argument("SimConfig: region side <= 0");
    if (population < 1) throw std::invalid_argument("SimConfig: population < 1");
    if (preconvergence_steps < 0 || training_steps < 0 || evaluation_steps < 1)
      throw std::invalid_argument("SimConfig: negative phase length");
    if (n_rollouts < 1) throw std::invalid_argument("SimConfig: n_rollouts < 1");
    if (kernels.empty()) throw std::invalid_argument("SimConfig: empty kernel bank");
    if (ec.radius <= 0.0) throw std::invalid_argument("SimConfig: EC radius <= 0");
    if (ec.center_x - ec.radius < 0.0 || ec.center_x + ec.radius > region_side ||
        ec.center_y - ec.radius < 0.0 || ec.center_y + ec.radius > region_side)
      throw std::invalid_argument("SimConfig: EC disc not contained in the region");
    if (mdn_window_samples < 1) throw std::invalid_argument("SimConfig: window too short");
    for (const auto& k : kernels)
      if (k.sigma_x <= 0.0 || k.sigma_y <= 0.0 || std::abs(k.rho) >= 1.0)
        throw std::invalid_argument("SimConfig: malformed kernel");
  }

  /// Small preset for laptop-scale experiments: fewer users, a shorter
  /// evaluation window, a lighter rollout budget, and reliability dynamics
  /// slow enough that a 30-step decision horizon has something to predict.
  SimConfig desk_scale() const {
    SimConfig c = *this;
    c.population = 200;
    c.evaluation_steps = 1000;
    c.n_rollouts = 32;
    c.chain = ReliabilityChain::persistent_episode_chain();
    return c;
  }
};

struct BaselineThresholds {
  double p_o = 0.5;
  double p_v = 0.5;
};

/// Double-threshold benchmark policy: migrate when the mean predicted
/// outage risk over the interval exceeds P_o; when migrating, sync the
/// users whose reduced visit probability exceeds P_v.
inline MigrationDecision double_threshold_decide(
    const std::vector<double>& p_o_horizon, const std::vector<std::string>& user_ids,
    const std::vector<std::vector<double>>& p_v_horizons,
    const BaselineThresholds& thresholds,
    VisitReducer reducer = VisitReducer::complement_product) {
  if (user_ids.size() != p_v_horizons.size())
    throw std::invalid_argument("double_threshold_decide: one horizon per user");
  if (thresholds.p_o < 0.0 || thresholds.p_o > 1.0 || thresholds.p_v < 0.0 ||
      thresholds.p_v > 1.0)
    throw std::invalid_argument("double_threshold_decide: thresholds outside [0,1]");
  MigrationDecision d;
  if (p_o_horizon.empty()) return d;
  double mean = 0.0;
  for (double p : p_o_horizon) mean += p;
  mean /= static_cast<double>(p_o_horizon.size());
  d.migrate = mean > thresholds.p_o;
  if (!d.migrate) return d;
  for (std::size_t u = 0; u < user_ids.size(); ++u)
    if (reduce_visit_probability(p_v_horizons[u], reducer) > thresholds.p_v)
      d.sync_set.insert(user_ids[u]);
  return d;
}

/// Everything one decision interval produced, policy-independent: the
/// predictions the controllers consume and the realized outage exposure of
/// every user that lived through the interval.
struct IntervalTrace {
  int interval = 0;
  std::vector<double> p_o;
  std::vector<std::string> user_ids;
  std::vector<std::vector<double>> p_v;
  std::vector<OutageExposure> exposures;
  std::map<std::string, int> exposed_steps;  // realized outage & in-EC counts
  int total_exposed_steps = 0;
  int outage_steps = 0;
};

struct SimTrace {
  std::vector<IntervalTrace> intervals;
  bool population_constant = true;
  int replacements = 0;
};

struct IntervalLedger {
  int interval = 0;
  bool migrated = false;
  int n_synced = 0;
  double realized_loss = 0.0;
  double cost = 0.0;
  double bound_migrate = 0.0;   // S1
  double bound_stay = 0.0;      // S2
  double expected_sum = 0.0;    // expected cost-plus-loss of the chosen plan
  double avoided_loss = 0.0;    // realized loss removed by coverage
  double no_action_loss = 0.0;  // realized loss had nothing been done
};

struct SimSummary {
  std::vector<IntervalLedger> ledger;
  double total_loss = 0.0;
  double total_cost = 0.0;
  bool population_constant = true;

  double total() const { return total_loss + total_cost; }
};

enum class ControllerKind { optimal, baseline };

namespace detail {

inline bool inside_region(const Eigen::Vector2d& p, double side) {
  return p.x() >= 0.0 && p.x() <= side && p.y() >= 0.0 && p.y() <= side;
}

inline Eigen::Vector2d boundary_point(double side, Pcg32& rng) {
  double u = rng.uniform(0.0, 4.0 * side);
  int edge = std::min(3, static_cast<int>(u / side));
  double offset = u - edge * side;
  switch (edge) {
    case 0: return {offset, 0.0};
    case 1: return {side, offset};
    case 2: return {side - offset, side};
    default: return {0.0, side - offset};
  }
}

struct SimUser {
  std::string id;
  Eigen::Vector2d pos{0.0, 0.0};
  int kernel = 0;
  std::vector<Eigen::Vector2d> history;  // capped, newest last
  std::vector<Eigen::Vector2d> train_trace;
};

/// Windows over an arbitrary position series for an arbitrary window size.
inline void append_windows(const std::vector<Eigen::Vector2d>& positions,
                           int window_samples, int first_target_delta,
                           std::vector<Eigen::VectorXd>& xs,
                           std::vector<Eigen::Vector2d>& ys) {
  const int n = static_cast<int>(positions.size());
  const int n_deltas = n - 1;
  for (int target = std::max(window_samples, first_target_delta);
       target < n_deltas; ++target) {
    Eigen::VectorXd x(2 * window_samples);
    for (int k = 0; k < window_samples; ++k) {
      Eigen::Vector2d d = positions[static_cast<std::size_t>(target - window_samples + k + 1)] -
                          positions[static_cast<std::size_t>(target - window_samples + k)];
      x(2 * k) = d.x();
      x(2 * k + 1) = d.y();
    }
    xs.push_back(std::move(x));
    Eigen::Vector2d t = positions[static_cast<std::size_t>(target + 1)] -
                        positions[static_cast<std::size_t>(target)];
    ys.push_back(t);
  }
}

inline TrainingData to_training_data(const std::vector<Eigen::VectorXd>& xs,
                                     const std::vector<Eigen::Vector2d>& ys) {
  TrainingData d;
  const auto n = static_cast<Eigen::Index>(xs.size());
  d.X.resize(n, n > 0 ? xs[0].size() : 0);
  d.Y.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.X.row(i) = xs[static_cast<std::size_t>(i)].transpose();
    d.Y.row(i) = ys[static_cast<std::size_t>(i)].transpose();
  }
  return d;
}

/// Seeded reservoir over the stream of training windows; keeps memory flat
/// no matter how long the training phase runs.
struct WindowReservoir {
  std::size_t cap;
  Pcg32 rng;
  std::size_t seen = 0;
  std::vector<Eigen::VectorXd> xs;
  std::vector<Eigen::Vector2d> ys;

  WindowReservoir(std::size_t cap_, std::uint64_t seed)
      : cap(cap_), rng(mix64(seed, 0x72657376ULL)) {}

  void offer(Eigen::VectorXd x, const Eigen::Vector2d& y) {
    ++seen;
    if (xs.size() < cap) {
      xs.push_back(std::move(x));
      ys.push_back(y);
      return;
    }
    auto slot = static_cast<std::size_t>(rng.next_double() * static_cast<double>(seen));
    if (slot < cap) {
      xs[slot] = std::move(x);
      ys[slot] = y;
    }
  }
};

}  // namespace detail

/// Pooled percentile of per-step displacement lengths across the kernel
/// bank; bounds how far any user can plausibly travel per step.
inline double kernel_step_percentile(const std::vector<KernelSpec>& kernels,
                                     double percentile, std::uint64_t seed,
                                     int draws_per_kernel = 4000) {
  std::vector<double> lengths;
  lengths.reserve(kernels.size() * static_cast<std::size_t>(draws_per_kernel));
  Pcg32 rng(mix64(seed, 0x76636170ULL));
  for (const auto& k : kernels)
    for (int i = 0; i < draws_per_kernel; ++i) lengths.push_back(k.sample(rng).norm());
  std::sort(lengths.begin(), lengths.end());
  auto rank = static_cast<std::size_t>(
      std::ceil(percentile * static_cast<double>(lengths.size())));
  rank = std::clamp<std::size_t>(rank, 1, lengths.size());
  return lengths[rank - 1];
}

/// Run the motion / outage / prediction part of the experiment once. The
/// returned trace is policy-independent: every controller is evaluated
/// against the same events, which is what makes grid comparisons
/// common-random-number sharp.
inline SimTrace simulate_trace(const SimConfig& config, std::uint64_t seed,
                               const MdnModel* initial_model = nullptr) {
  config.validate();
  const int T = config.econ.interval_steps;
  const int intervals = config.eval_intervals();
  if (intervals < 1)
    throw std::invalid_argument("simulate_trace: evaluation shorter than one interval");
  const int history_cap = config.mdn_window_samples + 2 + T;

  Pcg32 init_rng(mix64(seed, 0x696e6974ULL));
  Pcg32 motion_rng(mix64(seed, 0x6d6f7665ULL));
  Pcg32 arrival_rng(mix64(seed, 0x61727276ULL));
  Pcg32 chain_rng(mix64(seed, 0x636861696eULL));

  std::vector<detail::SimUser> users(static_cast<std::size_t>(config.population));
  long id_counter = 0;
  char id_buf[24];
  auto next_id = [&]() {
    std::snprintf(id_buf, sizeof id_buf, "u%06ld", id_counter++);
    return std::string(id_buf);
  };
  for (auto& u : users) {
    u.id = next_id();
    u.pos = {init_rng.uniform(0.0, config.region_side),
             init_rng.uniform(0.0, config.region_side)};
    u.kernel = init_rng.uniform_int(static_cast<int>(config.kernels.size()));
    u.history.push_back(u.pos);
  }

  ReliabilityChain chain = config.chain;
  SimTrace trace;
  trace.intervals.reserve(static_cast<std::size_t>(intervals));

  const bool training_phase_needed = initial_model == nullptr;
  detail::WindowReservoir reservoir(
      static_cast<std::size_t>(config.mdn_max_train_windows), mix64(seed, 0x636170ULL));
  auto harvest = [&](const std::vector<Eigen::Vector2d>& positions) {
    if (positions.size() < static_cast<std::size_t>(config.mdn_window_samples + 2))
      return;
    std::vector<Eigen::VectorXd> xs;
    std::vector<Eigen::Vector2d> ys;
    detail::append_windows(positions, config.mdn_window_samples, 0, xs, ys);
    for (std::size_t i = 0; i < xs.size(); ++i)
      reservoir.offer(std::move(xs[i]), ys[i]);
  };

  MdnModel model;
  RmspropState online_state;
  RmspropConfig online_cfg{config.mdn_learning_rate, 0.9, 1e-8};

  const double v_cap =
      kernel_step_percentile(config.kernels, config.candidate_percentile, seed);
  const double reach =
      config.ec.radius + config.candidate_margin_factor * T * v_cap;

  auto move_users = [&](bool in_training_phase) {
    for (auto& u : users) {
      u.pos += config.kernels[static_cast<std::size_t>(u.kernel)].sample(motion_rng);
      if (!detail::inside_region(u.pos, config.region_side)) {
        // finished user leaves; a fresh arrival takes the slot
        if (in_training_phase) harvest(u.train_trace);
        u.id = next_id();
        u.kernel = arrival_rng.uniform_int(static_cast<int>(config.kernels.size()));
        u.pos = detail::boundary_point(config.region_side, arrival_rng);
        u.history.clear();
        u.train_trace.clear();
        ++trace.replacements;
      }
      u.history.push_back(u.pos);
      if (static_cast<int>(u.history.size()) > history_cap)
        u.history.erase(u.history.begin());
      if (in_training_phase) u.train_trace.push_back(u.pos);
    }
    if (static_cast<int>(users.size()) != config.population)
      trace.population_constant = false;
  };

  for (int s = 0; s < config.preconvergence_steps; ++s) move_users(false);
  for (int s = 0; s < config.training_steps; ++s) move_users(training_phase_needed);

  auto train_initial_model = [&]() {
    for (auto& u : users) {
      harvest(u.train_trace);
      u.train_trace.clear();
      u.train_trace.shrink_to_fit();
    }
    if (reservoir.xs.empty())
      throw std::runtime_error(
          "simulate_trace: training phase produced no windows; lengthen it or "
          "provide a checkpoint");
    TrainingData all = detail::to_training_data(reservoir.xs, reservoir.ys);
    reservoir.xs.clear();
    reservoir.ys.clear();
    // 90/10 window split for the in-run fit
    Pcg32 split_rng(mix64(seed, 0x73706c74ULL));
    auto order = shuffled_indices(static_cast<std::size_t>(all.size()), split_rng);
    auto n_train = static_cast<Eigen::Index>(
        std::llround(0.9 * static_cast<double>(all.size())));
    n_train = std::max<Eigen::Index>(1, std::min(n_train, all.size()));
    TrainingData train_set, val_set;
    train_set.X.resize(n_train, all.X.cols());
    train_set.Y.resize(n_train, 2);
    val_set.X.resize(all.size() - n_train, all.X.cols());
    val_set.Y.resize(all.size() - n_train, 2);
    for (Eigen::Index i = 0; i < all.size(); ++i) {
      if (i < n_train) {
        train_set.X.row(i) = all.X.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(i)]));
        train_set.Y.row(i) = all.Y.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(i)]));
      } else {
        val_set.X.row(i - n_train) =
            all.X.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(i)]));
        val_set.Y.row(i - n_train) =
            all.Y.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(i)]));
      }
    }
    model = MdnModel(2 * config.mdn_window_samples, config.mdn_hidden1,
                     config.mdn_hidden2, config.mdn_components,
                     mix64(seed, 0x6d6f64656cULL));
    TrainOptions opts;
    opts.epochs = config.mdn_epochs;
    opts.batch_size = config.mdn_batch;
    opts.optimizer = RmspropConfig{config.mdn_learning_rate, 0.9, 1e-8};
    opts.shuffle_seed = mix64(seed, 0x7368756646ULL);
    if (val_set.size() == 0) {
      val_set.X = train_set.X.topRows(1);
      val_set.Y = train_set.Y.topRows(1);
    }
    train_mdn(model, train_set, val_set, opts);
  };

  if (initial_model != nullptr) {
    model = *initial_model;
    if (model.input_dim() != 2 * config.mdn_window_samples)
      throw std::invalid_argument("simulate_trace: checkpoint window size mismatch");
  } else {
    train_initial_model();
  }
  online_state = RmspropState::zeros_like(model);

  for (int k = 0; k < intervals; ++k) {
    IntervalTrace itrace;
    itrace.interval = k;
    itrace.p_o = outage_horizon(chain, T);

    // candidate users get rollout predictions; everyone else is
    // unreachable within the interval and scores zero
    std::vector<UserContext> contexts;
    std::vector<std::size_t> candidate_slot;
    itrace.user_ids.reserve(users.size());
    itrace.p_v.assign(users.size(), {});
    for (std::size_t i = 0; i < users.size(); ++i) {
      itrace.user_ids.push_back(users[i].id);
      double dist = (users[i].pos - Eigen::Vector2d(config.ec.center_x,
                                                    config.ec.center_y))
                        .norm();
      if (dist <= reach) {
        contexts.push_back({users[i].id, users[i].history});
        candidate_slot.push_back(i);
      } else {
        itrace.p_v[i].assign(static_cast<std::size_t>(T), 0.0);
      }
    }
    auto predictions = predict_visit_probabilities_batch(
        model, contexts, config.ec, T, config.n_rollouts,
        mix64(seed, 0x70726564ULL, static_cast<std::uint64_t>(k)));
    for (std::size_t c = 0; c < contexts.size(); ++c)
      itrace.p_v[candidate_slot[c]] = std::move(predictions[c].probability);

    itrace.exposures.reserve(users.size());
    for (std::size_t i = 0; i < users.size(); ++i)
      itrace.exposures.push_back(
          {itrace.user_ids[i], expected_outage_exposure(itrace.p_o, itrace.p_v[i])});

    // play the interval out
    for (int s = 0; s < T; ++s) {
      step(chain, chain_rng);
      bool outage_now = chain.is_outage(chain.current_state);
      if (outage_now) ++itrace.outage_steps;
      move_users(false);
      if (outage_now) {
        for (const auto& u : users)
          if (ec_contains(config.ec, u.pos.x(), u.pos.y())) {
            ++itrace.exposed_steps[u.id];
            ++itrace.total_exposed_steps;
          }
      }
    }

    if (config.mdn_online_update) {
      // one optimizer step on the windows whose targets this interval produced
      std::vector<Eigen::VectorXd> fresh_xs;
      std::vector<Eigen::Vector2d> fresh_ys;
      for (const auto& u : users) {
        const int n_deltas = static_cast<int>(u.history.size()) - 1;
        detail::append_windows(u.history, config.mdn_window_samples,
                               std::max(0, n_deltas - T), fresh_xs, fresh_ys);
      }
      if (!fresh_xs.empty()) {
        Pcg32 pick_rng(mix64(seed, 0x6f6e6c696eULL, static_cast<std::uint64_t>(k)));
        std::vector<std::size_t> order = shuffled_indices(fresh_xs.size(), pick_rng);
        auto take = std::min<std::size_t>(fresh_xs.size(),
                                          static_cast<std::size_t>(config.mdn_batch));
        std::vector<Eigen::VectorXd> xs;
        std::vector<Eigen::Vector2d> ys;
        for (std::size_t i = 0; i < take; ++i) {
          xs.push_back(std::move(fresh_xs[order[i]]));
          ys.push_back(fresh_ys[order[i]]);
        }
        TrainingData batch = detail::to_training_data(xs, ys);
        MdnGradients grads;
        model.nll_gradient(batch, grads);
        rmsprop_step(model, online_state, grads, online_cfg);
      }
    }

    trace.intervals.push_back(std::move(itrace));
  }
  return trace;
}

/// Apply one controller to a recorded trace and account its costs and
/// realized losses.
inline SimSummary evaluate_policy(const SimTrace& trace, const SimConfig& config,
                                  ControllerKind kind,
                                  const BaselineThresholds& thresholds = {}) {
  const EconomicParams& econ = config.econ;
  SimSummary summary;
  summary.population_constant = trace.population_constant;
  for (const auto& itrace : trace.intervals) {
    MigrationDecision decision;
    MigrationBound mig = migration_bound(itrace.exposures, econ);
    double stay = no_migration_bound(itrace.exposures, econ);
    if (kind == ControllerKind::optimal) {
      if (mig.bound < stay) {
        decision.migrate = true;
        decision.sync_set = mig.sync_set;
      }
    } else {
      decision = double_threshold_decide(itrace.p_o, itrace.user_ids, itrace.p_v,
                                         thresholds, config.reducer);
    }

    IntervalLedger row;
    row.interval = itrace.interval;
    row.migrated = decision.migrate;
    row.n_synced = static_cast<int>(decision.sync_set.size());
    row.bound_migrate = mig.bound;
    row.bound_stay = stay;
    row.cost = econ.migration_cost * (decision.migrate ? 1.0 : 0.0) +
               econ.sync_cost * static_cast<double>(decision.sync_set.size());
    int covered = 0, uncovered = 0;
    for (const auto& [uid, steps] : itrace.exposed_steps) {
      if (decision.migrate && decision.sync_set.count(uid)) covered += steps;
      else uncovered += steps;
    }
    row.realized_loss = econ.loss_rate * uncovered;
    row.avoided_loss = econ.loss_rate * covered;
    row.no_action_loss = econ.loss_rate * itrace.total_exposed_steps;
    row.expected_sum = cost_loss_sum(decision, itrace.exposures, econ);
    summary.total_loss += row.realized_loss;
    summary.total_cost += row.cost;
    summary.ledger.push_back(std::move(row));
  }
  return summary;
}

/// One full experiment for one controller.
inline SimSummary run_simulation(const SimConfig& config, ControllerKind kind,
                                 std::uint64_t seed,
                                 const BaselineThresholds& thresholds = {},
                                 const MdnModel* initial_model = nullptr) {
  SimTrace trace = simulate_trace(config, seed, initial_model);
  return evaluate_policy(trace, config, kind, thresholds);
}

struct BenchmarkRow {
  bool is_optimal = false;
  double p_o = 0.0;
  double p_v = 0.0;
  double mean_total = 0.0;
  double std_total = 0.0;
  std::vector<double> totals;  // per seed
};

/// Grid sweep of the double-threshold baseline against the optimal
/// controller. Each seed's event trace and predictions are shared by every
/// policy (common random numbers).
inline std::vector<BenchmarkRow> benchmark_grid(const SimConfig& config,
                                                const std::vector<double>& po_grid,
                                                const std::vector<double>& pv_grid,
                                                const std::vector<std::uint64_t>& seeds,
                                                const MdnModel* initial_model = nullptr) {
  if (po_grid.empty() || pv_grid.empty() || seeds.empty())
    throw std::invalid_argument("benchmark_grid: empty grid or seed list");
  std::vector<BenchmarkRow> rows;
  for (double po : po_grid)
    for (double pv : pv_grid) rows.push_back({false, po, pv, 0.0, 0.0, {}});
  rows.push_back({true, 0.0, 0.0, 0.0, 0.0, {}});

  for (std::uint64_t seed : seeds) {
    SimTrace trace = simulate_trace(config, seed, initial_model);
    std::size_t r = 0;
    for (double po : po_grid)
      for (double pv : pv_grid) {
        auto summary = evaluate_policy(trace, config, ControllerKind::baseline,
                                       {po, pv});
        rows[r++].totals.push_back(summary.total());
      }
    auto optimal = evaluate_policy(trace, config, ControllerKind::optimal);
    rows.back().totals.push_back(optimal.total());
  }

  for (auto& row : rows) {
    double mean = 0.0;
    for (double t : row.totals) mean += t;
    mean /= static_cast<double>(row.totals.size());
    double var = 0.0;
    for (double t : row.totals) var += (t - mean) * (t - mean);
    row.mean_total = mean;
    row.std_total = row.totals.size() > 1
                        ? std::sqrt(var / static_cast<double>(row.totals.size() - 1))
                        : 0.0;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV emission (stable column order; %.17g so reruns are byte-identical)
// ---------------------------------------------------------------------------

inline void write_ledger_csv(std::ostream& os, const SimSummary& summary) {
  os << "interval,m,n_synced,realized_loss,cost,S1,S2\n";
  char buf[160];
  for (const auto& row : summary.ledger) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g,%.17g\n", row.interval,
                  row.migrated ? 1 : 0, row.n_synced, row.realized_loss, row.cost,
                  row.bound_migrate, row.bound_stay);
    os << buf;
  }
}

inline void write_benchmark_csv(std::ostream& os, const std::vector<BenchmarkRow>& rows) {
  os << "policy,P_o,P_v,mean_total,std_total\n";
  char buf[160];
  for (const auto& row : rows) {
    if (row.is_optimal) {
      std::snprintf(buf, sizeof buf, "optimal,,,%.17g,%.17g\n", row.mean_total,
                    row.std_total);
    } else {
      std::snprintf(buf, sizeof buf, "baseline,%.17g,%.17g,%.17g,%.17g\n", row.p_o,
                    row.p_v, row.mean_total, row.std_total);
    }
    os << buf;
  }
}

}  // namespace vnfmig
