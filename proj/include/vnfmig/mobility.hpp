#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vnfmig/mdn.hpp"
#include "vnfmig/rng.hpp"

namespace vnfmig {

/// Circular edge-coverage area.
struct EcGeometry {
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 1.0;
};

/// Boundary-inclusive disc membership.
inline bool ec_contains(const EcGeometry& ec, double x, double y) {
  double dx = x - ec.center_x, dy = y - ec.center_y;
  return dx * dx + dy * dy <= ec.radius * ec.radius;
}

/// A user's recent uniform-rate position history, newest last. A window of
/// window_len displacements plus the current position are needed for a
/// prediction; shorter histories are zero-padded at the old end.
struct UserContext {
  std::string user_id;
  std::vector<Eigen::Vector2d> positions;
};

struct VisitPrediction {
  std::vector<double> probability;  // per step of the horizon
  bool padded_history = false;      // window was zero-padded (fresh arrival)
};

/// Per-step EC visit probabilities for a set of users over the coming
/// horizon, via autoregressive Monte-Carlo rollouts of the model. Every
/// (user, rollout) pair draws from its own seed-derived stream, so results
/// do not depend on batch composition or evaluation schedule.
inline std::vector<VisitPrediction> predict_visit_probabilities_batch(
    const MdnModel& model, const std::vector<UserContext>& contexts,
    const EcGeometry& ec, int horizon, int n_rollouts, std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("predict: horizon must be >= 1");
  if (n_rollouts < 1) throw std::invalid_argument("predict: n_rollouts must be >= 1");
  const int wlen = model.window_len();
  const Eigen::Index n_users = static_cast<Eigen::Index>(contexts.size());
  const Eigen::Index rows = n_users * n_rollouts;

  std::vector<VisitPrediction> out(contexts.size());
  if (contexts.empty()) return out;

  // Rollout state: raw displacement window per row plus current position.
  Eigen::MatrixXd windows(rows, model.input_dim());
  Eigen::MatrixXd pos(rows, 2);
  std::vector<Pcg32> streams;
  streams.reserve(static_cast<std::size_t>(rows));

  for (Eigen::Index u = 0; u < n_users; ++u) {
    const auto& ctx = contexts[static_cast<std::size_t>(u)];
    if (ctx.positions.empty())
      throw std::invalid_argument("predict: user " + ctx.user_id + " has no history");
    const auto n_pos = static_cast<int>(ctx.positions.size());
    const int n_deltas = std::min(n_pos - 1, wlen);
    out[static_cast<std::size_t>(u)].padded_history = n_pos < wlen + 1;

    Eigen::RowVectorXd window = Eigen::RowVectorXd::Zero(model.input_dim());
    for (int d = 0; d < n_deltas; ++d) {
      // newest deltas at the window's tail
      int slot = wlen - n_deltas + d;
      const Eigen::Vector2d step = ctx.positions[static_cast<std::size_t>(n_pos - 1 - n_deltas + d + 1)] -
                                   ctx.positions[static_cast<std::size_t>(n_pos - 1 - n_deltas + d)];
      window(2 * slot) = step.x();
      window(2 * slot + 1) = step.y();
    }
    std::uint64_t user_hash = hash_str(ctx.user_id);
    for (int r = 0; r < n_rollouts; ++r) {
      Eigen::Index row = u * n_rollouts + r;
      windows.row(row) = window;
      pos.row(row) = ctx.positions.back().transpose();
      streams.emplace_back(mix64(seed, user_hash, static_cast<std::uint64_t>(r)),
                           0x726f6c6cULL);
    }
    out[static_cast<std::size_t>(u)].probability.assign(static_cast<std::size_t>(horizon), 0.0);
  }

  const Scaler& scaler = model.scaler();
  MdnModel::Workspace ws;
  MixtureBatch mb;
  // bound the activation matrices: a chunk of 16384 rows through the
  // standard network peaks below ~100 MB of scratch
  constexpr Eigen::Index kMaxForwardRows = 16384;
  for (int step_k = 0; step_k < horizon; ++step_k) {
    for (Eigen::Index chunk = 0; chunk < rows; chunk += kMaxForwardRows) {
      const Eigen::Index len = std::min(kMaxForwardRows, rows - chunk);
      model.forward_batch(windows.middleRows(chunk, len), ws, mb);
      for (Eigen::Index r = 0; r < len; ++r) {
        Eigen::Index row = chunk + r;
        Eigen::Vector2d dn = mb.sample_row(r, streams[static_cast<std::size_t>(row)]);
        Eigen::Vector2d delta = scaler.denormalize(dn.x(), dn.y());
        pos(row, 0) += delta.x();
        pos(row, 1) += delta.y();
        // slide the window left by one displacement
        for (int c = 0; c + 2 < model.input_dim(); ++c)
          windows(row, c) = windows(row, c + 2);
        windows(row, model.input_dim() - 2) = delta.x();
        windows(row, model.input_dim() - 1) = delta.y();
      }
    }
    for (Eigen::Index u = 0; u < n_users; ++u) {
      int inside = 0;
      for (int r = 0; r < n_rollouts; ++r) {
        Eigen::Index row = u * n_rollouts + r;
        if (ec_contains(ec, pos(row, 0), pos(row, 1))) ++inside;
      }
      out[static_cast<std::size_t>(u)].probability[static_cast<std::size_t>(step_k)] =
          static_cast<double>(inside) / n_rollouts;
    }
  }
  return out;
}

inline VisitPrediction predict_visit_probabilities(const MdnModel& model,
                                                   const UserContext& ctx,
                                                   const EcGeometry& ec, int horizon,
                                                   int n_rollouts, std::uint64_t seed) {
  return predict_visit_probabilities_batch(model, {ctx}, ec, horizon, n_rollouts,
                                           seed)[0];
}

}  // namespace vnfmig
