#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vnfmig/economics.hpp"

namespace vnfmig {

/// Result of one migration decision: the chosen plan, both achievable
/// bounds, and the per-user exposures they were computed from.
struct DecisionOutcome {
  MigrationDecision decision;
  double bound_migrate = 0.0;  // S1: migrate branch, optimal sync plan
  double bound_stay = 0.0;     // S2: stay branch, empty sync plan
  std::vector<OutageExposure> exposures;

  double achieved_sum() const { return std::min(bound_migrate, bound_stay); }
};

/// Cost-loss-optimal decision given precomputed exposures. Migrate iff the
/// migrate-branch bound is strictly lower; on an exact tie stay put (same
/// expected sum, fewer operations). A stay decision carries an empty sync
/// set.
inline DecisionOutcome decide_from_exposures(std::vector<OutageExposure> exposures,
                                             const EconomicParams& params) {
  DecisionOutcome out;
  MigrationBound mig = migration_bound(exposures, params);
  out.bound_migrate = mig.bound;
  out.bound_stay = no_migration_bound(exposures, params);
  if (out.bound_migrate < out.bound_stay) {
    out.decision.migrate = true;
    out.decision.sync_set = std::move(mig.sync_set);
  } else {
    out.decision.migrate = false;
    out.decision.sync_set.clear();
  }
  out.exposures = std::move(exposures);
  return out;
}

/// Full decision from raw probability horizons. Every horizon must have
/// exactly params.interval_steps entries in [0, 1].
inline DecisionOutcome decide(const std::vector<std::string>& user_ids,
                              std::span<const double> outage_horizon,
                              const std::vector<std::vector<double>>& visit_horizons,
                              const EconomicParams& params) {
  params.validate();
  if (user_ids.size() != visit_horizons.size())
    throw std::invalid_argument("decide: one visit horizon per user required");
  if (outage_horizon.size() != static_cast<std::size_t>(params.interval_steps))
    throw std::invalid_argument("decide: outage horizon length != interval_steps");
  std::vector<OutageExposure> exposures;
  exposures.reserve(user_ids.size());
  for (std::size_t u = 0; u < user_ids.size(); ++u) {
    if (visit_horizons[u].size() != outage_horizon.size())
      throw std::invalid_argument("decide: visit horizon length mismatch for user " +
                                  user_ids[u]);
    exposures.push_back(
        {user_ids[u], expected_outage_exposure(outage_horizon, visit_horizons[u])});
  }
  return decide_from_exposures(std::move(exposures), params);
}

/// Exhaustive-search oracle: evaluates every (m, sync set) pair and returns
/// a global minimizer of the expected cost-loss sum. Ties prefer m=0, then
/// the smaller sync set, then the lexicographically earliest sync set in
/// user order. Capacity-limited to 20 users (2^(n+1) candidate plans).
inline DecisionOutcome brute_force_decide(const std::vector<OutageExposure>& exposures,
                                          const EconomicParams& params) {
  params.validate();
  const std::size_t n = exposures.size();
  if (n > 20)
    throw std::length_error("brute_force_decide: more than 20 users");

  // Sync sets are enumerated as bitmasks over users sorted by id; bit b of a
  // mask is the b-th user in that order.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return exposures[a].user_id < exposures[b].user_id;
  });
  std::vector<std::uint32_t> user_bit(n);
  for (std::size_t b = 0; b < n; ++b) user_bit[order[b]] = static_cast<std::uint32_t>(b);

  bool best_migrate = false;
  std::uint32_t best_mask = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  auto popcount = [](std::uint32_t v) {
    int c = 0;
    while (v) {
      v &= v - 1;
      ++c;
    }
    return c;
  };
  // On sum ties: prefer m=0, then fewer synced users, then the set whose
  // sorted membership sequence is lexicographically earliest (the set that
  // CONTAINS the lowest differing user).
  auto better = [&](double sum, bool migrate, std::uint32_t mask) {
    if (sum < best_sum) return true;
    if (sum > best_sum) return false;
    if (migrate != best_migrate) return !migrate;
    int pc = popcount(mask), best_pc = popcount(best_mask);
    if (pc != best_pc) return pc < best_pc;
    std::uint32_t diff = mask ^ best_mask;
    if (diff == 0) return false;
    std::uint32_t lowest = diff & (~diff + 1);
    return (mask & lowest) != 0;
  };

  const std::uint32_t mask_end = n == 0 ? 1 : (1u << n);
  for (int m = 0; m <= 1; ++m) {
    for (std::uint32_t mask = 0; mask < mask_end; ++mask) {
      // expected sum evaluated in the same per-user order as cost_loss_sum
      double sum = params.migration_cost * m;
      for (std::size_t i = 0; i < n; ++i) {
        double s = (mask >> user_bit[i]) & 1u ? 1.0 : 0.0;
        sum += params.loss_rate * exposures[i].exposure * (1.0 - m * s) +
               params.sync_cost * s;
      }
      if (better(sum, m == 1, mask)) {
        best_sum = sum;
        best_migrate = (m == 1);
        best_mask = mask;
      }
    }
  }

  DecisionOutcome out;
  out.decision.migrate = best_migrate;
  for (std::size_t b = 0; b < n; ++b)
    if ((best_mask >> b) & 1u) out.decision.sync_set.insert(exposures[order[b]].user_id);
  MigrationBound mig = migration_bound(exposures, params);
  out.bound_migrate = mig.bound;
  out.bound_stay = no_migration_bound(exposures, params);
  out.exposures = exposures;
  return out;
}

}  // namespace vnfmig
