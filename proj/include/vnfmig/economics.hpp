#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vnfmig {

/// Monetary constants of the migration economy. One loss rate for all
/// subscribers; costs are per migration event and per profile sync.
struct EconomicParams {
  double loss_rate = 1.0;       // money per subscriber per time step
  double migration_cost = 10.0; // per VNF migration (c_NF)
  double sync_cost = 0.5;       // per subscriber-profile sync (c_SP)
  int interval_steps = 30;      // decision horizon T, in time steps

  void validate() const {
    if (loss_rate < 0 || migration_cost < 0 || sync_cost < 0)
      throw std::invalid_argument("EconomicParams: monetary fields must be >= 0");
    if (interval_steps < 1)
      throw std::invalid_argument("EconomicParams: interval_steps must be >= 1");
  }
};

/// Expected number of outage-exposed time steps for one user over the
/// coming interval (T_u).
struct OutageExposure {
  std::string user_id;
  double exposure = 0.0;
};

/// A migration decision: the binary migrate label plus the set of users
/// whose profiles get synchronized. When migrate is false the sync set
/// must be empty in any emitted decision.
struct MigrationDecision {
  bool migrate = false;
  std::set<std::string> sync_set;
};

/// T_u = sum over the horizon of p_o(tau) * p_v(tau).
/// Both vectors must have equal length >= 1 and entries in [0, 1].
inline double expected_outage_exposure(std::span<const double> outage_prob,
                                       std::span<const double> visit_prob) {
  if (outage_prob.size() != visit_prob.size())
    throw std::invalid_argument("expected_outage_exposure: length mismatch");
  if (outage_prob.empty())
    throw std::invalid_argument("expected_outage_exposure: empty horizon");
  double sum = 0.0;
  for (std::size_t i = 0; i < outage_prob.size(); ++i) {
    double po = outage_prob[i], pv = visit_prob[i];
    if (po < 0.0 || po > 1.0 || pv < 0.0 || pv > 1.0)
      throw std::invalid_argument("expected_outage_exposure: probability out of [0,1]");
    sum += po * pv;
  }
  return sum;
}

/// Expected cost + loss of a (migrate, sync set) pair:
///   c_NF*m + sum_u { l*T_u*(1 - m*s_u) + c_SP*s_u }.
/// Evaluates any pair, including m=0 with a nonempty sync set, so that an
/// exhaustive search can certify that such plans are never optimal.
inline double cost_loss_sum(const MigrationDecision& decision,
                            const std::vector<OutageExposure>& exposures,
                            const EconomicParams& params) {
  params.validate();
  for (const auto& uid : decision.sync_set) {
    bool known = std::any_of(exposures.begin(), exposures.end(),
                             [&](const OutageExposure& e) { return e.user_id == uid; });
    if (!known)
      throw std::invalid_argument("cost_loss_sum: sync_set references unknown user " + uid);
  }
  double m = decision.migrate ? 1.0 : 0.0;
  double sum = params.migration_cost * m;
  for (const auto& e : exposures) {
    double s = decision.sync_set.count(e.user_id) ? 1.0 : 0.0;
    sum += params.loss_rate * e.exposure * (1.0 - m * s) + params.sync_cost * s;
  }
  return sum;
}

struct MigrationBound {
  double bound = 0.0;
  std::set<std::string> sync_set;  // the plan that achieves the bound
};

/// Achievable lower bound of the migrate branch:
///   c_NF + sum_u min(l*T_u, c_SP),
/// met exactly by syncing every user with l*T_u >= c_SP (ties sync).
inline MigrationBound migration_bound(const std::vector<OutageExposure>& exposures,
                                      const EconomicParams& params) {
  params.validate();
  MigrationBound out;
  out.bound = params.migration_cost;
  for (const auto& e : exposures) {
    double risk = params.loss_rate * e.exposure;
    if (risk >= params.sync_cost) {
      out.bound += params.sync_cost;
      out.sync_set.insert(e.user_id);
    } else {
      out.bound += risk;
    }
  }
  return out;
}

/// Achievable lower bound of the stay branch: sum_u l*T_u (sync nothing).
inline double no_migration_bound(const std::vector<OutageExposure>& exposures,
                                 const EconomicParams& params) {
  params.validate();
  double sum = 0.0;
  for (const auto& e : exposures) sum += params.loss_rate * e.exposure;
  return sum;
}

}  // namespace vnfmig
