#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "vnfmig/rng.hpp"

namespace vnfmig {

/// Discrete-time Markov model of VNF reliability. Reliability enters only
/// through the state partition: a step spent in any state of outage_states
/// counts as an outage. Rows of the transition matrix index the current
/// state, columns the next.
struct ReliabilityChain {
  std::vector<std::string> state_names;
  Eigen::MatrixXd transitions;
  std::vector<int> outage_states;
  int current_state = 0;

  int size() const { return static_cast<int>(state_names.size()); }

  bool is_outage(int state) const {
    return std::find(outage_states.begin(), outage_states.end(), state) !=
           outage_states.end();
  }

  void validate() const {
    const int n = size();
    if (n < 2) throw std::invalid_argument("ReliabilityChain: need at least 2 states");
    if (transitions.rows() != n || transitions.cols() != n)
      throw std::invalid_argument("ReliabilityChain: transition matrix shape mismatch");
    for (int i = 0; i < n; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < n; ++j) {
        if (transitions(i, j) < 0.0)
          throw std::invalid_argument("ReliabilityChain: negative transition probability");
        row_sum += transitions(i, j);
      }
      if (std::abs(row_sum - 1.0) > 1e-9)
        throw std::invalid_argument("ReliabilityChain: row " + std::to_string(i) +
                                    " does not sum to 1");
    }
    if (outage_states.empty())
      throw std::invalid_argument("ReliabilityChain: outage state set is empty");
    if (static_cast<int>(outage_states.size()) >= n)
      throw std::invalid_argument("ReliabilityChain: outage states must be a strict subset");
    for (int s : outage_states)
      if (s < 0 || s >= n)
        throw std::invalid_argument("ReliabilityChain: outage state index out of range");
    if (current_state < 0 || current_state >= n)
      throw std::invalid_argument("ReliabilityChain: current state out of range");
  }

  /// Default 4-state chain: normal / degraded / outage / repairing.
  /// Captures slow degradation, a rare direct disaster edge, and a repair
  /// path; the exact rates are configuration, not ground truth.
  static ReliabilityChain default_chain() {
    ReliabilityChain c;
    c.state_names = {"normal", "degraded", "outage", "repairing"};
    c.transitions.resize(4, 4);
    //            normal degraded outage repairing
    c.transitions << 0.948, 0.05, 0.002, 0.0,   // normal
        0.6, 0.2, 0.2, 0.0,                     // degraded
        0.0, 0.0, 0.5, 0.5,                     // outage
        0.7, 0.0, 0.0, 0.3;                     // repairing
    c.outage_states = {2};
    c.current_state = 0;
    return c;
  }

  /// Same topology with slower dynamics: degradation builds up and outage
  /// and repair episodes persist for many steps, so the state observed at a
  /// decision boundary actually predicts the coming interval. Used by the
  /// desk-scale preset, where decisions are 30 steps apart.
  static ReliabilityChain persistent_episode_chain() {
    ReliabilityChain c;
    c.state_names = {"normal", "degraded", "outage", "repairing"};
    c.transitions.resize(4, 4);
    //            normal degraded outage repairing
    c.transitions << 0.9875, 0.012, 0.0005, 0.0,  // normal
        0.05, 0.87, 0.08, 0.0,                    // degraded
        0.0, 0.0, 0.88, 0.12,                     // outage
        0.25, 0.0, 0.0, 0.75;                     // repairing
    c.outage_states = {2};
    c.current_state = 0;
    return c;
  }
};

/// Sample the next state from the current row and advance the chain.
inline int step(ReliabilityChain& chain, Pcg32& rng) {
  const int n = chain.size();
  double u = rng.next_double();
  double cum = 0.0;
  int next = n - 1;
  for (int j = 0; j < n; ++j) {
    cum += chain.transitions(chain.current_state, j);
    if (u < cum) {
      next = j;
      break;
    }
  }
  chain.current_state = next;
  return next;
}

/// Probability of being in an outage state exactly k steps ahead of
/// from_state, by iterated vector-matrix products (exact forward
/// prediction, no sampling).
inline double outage_probability(const ReliabilityChain& chain, int from_state, int k) {
  if (k < 1) throw std::invalid_argument("outage_probability: k must be >= 1");
  if (from_state < 0 || from_state >= chain.size())
    throw std::invalid_argument("outage_probability: from_state out of range");
  Eigen::RowVectorXd dist = Eigen::RowVectorXd::Zero(chain.size());
  dist(from_state) = 1.0;
  for (int i = 0; i < k; ++i) dist = dist * chain.transitions;
  double p = 0.0;
  for (int s : chain.outage_states) p += dist(s);
  return p;
}

/// p_o over the coming interval: element k-1 is the outage probability
/// k steps ahead of the chain's current state.
inline std::vector<double> outage_horizon(const ReliabilityChain& chain, int horizon) {
  if (horizon < 1) throw std::invalid_argument("outage_horizon: horizon must be >= 1");
  Eigen::RowVectorXd dist = Eigen::RowVectorXd::Zero(chain.size());
  dist(chain.current_state) = 1.0;
  std::vector<double> out;
  out.reserve(horizon);
  for (int k = 0; k < horizon; ++k) {
    dist = dist * chain.transitions;
    double p = 0.0;
    for (int s : chain.outage_states) p += dist(s);
    out.push_back(p);
  }
  return out;
}

/// Stationary distribution by power iteration (used by tests and for
/// reporting; chains here are small).
inline Eigen::RowVectorXd stationary_distribution(const ReliabilityChain& chain,
                                                  int iterations = 200000,
                                                  double tol = 1e-14) {
  Eigen::RowVectorXd dist =
      Eigen::RowVectorXd::Constant(chain.size(), 1.0 / chain.size());
  for (int i = 0; i < iterations; ++i) {
    Eigen::RowVectorXd next = dist * chain.transitions;
    if ((next - dist).cwiseAbs().maxCoeff() < tol) return next;
    dist = next;
  }
  return dist;
}

}  // namespace vnfmig
