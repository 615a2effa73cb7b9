#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "vnfmig/rng.hpp"

namespace vnfmig {

// Head activation guards. The sigma clamp keeps exp() finite for any finite
// pre-activation; the rho scale keeps |rho| strictly below 1 even where
// tanh saturates to 1.0 in double precision; the weight floor keeps every
// mixture weight strictly inside (0,1) when the softmax saturates.
inline constexpr double kLogSigmaClamp = 300.0;
inline constexpr double kRhoScale = 1.0 - 1e-9;
inline constexpr double kWeightFloor = 1e-12;
inline constexpr double kDensityFloor = 1e-300;
inline constexpr double kHeadInitScale = 0.1;

/// One bivariate Gaussian kernel of the output mixture.
struct MixtureComponent {
  double weight = 1.0;
  double mean_x = 0.0, mean_y = 0.0;
  double sigma_x = 1.0, sigma_y = 1.0;
  double rho = 0.0;
};

struct MixtureParams {
  std::vector<MixtureComponent> components;

  void validate() const {
    if (components.empty())
      throw std::invalid_argument("MixtureParams: no components");
    double total = 0.0;
    for (const auto& c : components) {
      if (!(c.weight > 0.0 && c.weight < 1.0) && components.size() > 1)
        throw std::invalid_argument("MixtureParams: weight outside (0,1)");
      if (!(c.sigma_x > 0.0) || !(c.sigma_y > 0.0))
        throw std::invalid_argument("MixtureParams: nonpositive sigma");
      if (!(std::abs(c.rho) < 1.0))
        throw std::invalid_argument("MixtureParams: |rho| must be < 1");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("MixtureParams: weights do not sum to 1");
  }
};

/// log of the bivariate normal kernel at (tx, ty).
inline double log_gaussian2d(const MixtureComponent& c, double tx, double ty) {
  double zx = (tx - c.mean_x) / c.sigma_x;
  double zy = (ty - c.mean_y) / c.sigma_y;
  double one_minus_r2 = 1.0 - c.rho * c.rho;
  double q = zx * zx + zy * zy - 2.0 * c.rho * zx * zy;
  return -std::log(2.0 * std::numbers::pi) - std::log(c.sigma_x) -
         std::log(c.sigma_y) - 0.5 * std::log(one_minus_r2) -
         q / (2.0 * one_minus_r2);
}

/// Mixture log-density via log-sum-exp over components.
inline double log_mixture_density(const MixtureParams& params, double tx, double ty) {
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(params.components.size());
  for (const auto& c : params.components) {
    double t = std::log(c.weight) + log_gaussian2d(c, tx, ty);
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  if (!std::isfinite(max_term)) return -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - max_term);
  return max_term + std::log(sum);
}

inline double mixture_density(const MixtureParams& params, double tx, double ty) {
  return std::exp(log_mixture_density(params, tx, ty));
}

/// Draw one (dx, dy) from the mixture: categorical component choice, then a
/// correlated bivariate normal draw.
inline Eigen::Vector2d sample_mixture(const MixtureParams& params, Pcg32& rng) {
  std::vector<double> w;
  w.reserve(params.components.size());
  for (const auto& c : params.components) w.push_back(c.weight);
  const MixtureComponent& c =
      params.components[sample_categorical(w, rng.next_double())];
  double z1 = rng.normal();
  double z2 = rng.normal();
  double x = c.mean_x + c.sigma_x * z1;
  double y = c.mean_y + c.sigma_y * (c.rho * z1 + std::sqrt(1.0 - c.rho * c.rho) * z2);
  return {x, y};
}

/// Per-coordinate standardization of displacement features. Fitted on the
/// training targets and frozen with the model; identity until fitted.
struct Scaler {
  double mean_x = 0.0, mean_y = 0.0;
  double std_x = 1.0, std_y = 1.0;

  Eigen::Vector2d normalize(double x, double y) const {
    return {(x - mean_x) / std_x, (y - mean_y) / std_y};
  }
  Eigen::Vector2d denormalize(double nx, double ny) const {
    return {mean_x + std_x * nx, mean_y + std_y * ny};
  }
};

/// Mixture parameters for a whole batch, one row per input window.
struct MixtureBatch {
  Eigen::MatrixXd weight, mean_x, mean_y, sigma_x, sigma_y, rho;
  Eigen::MatrixXd tanh_rho;                   // cached for the gradient
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> sigma_x_clamped, sigma_y_clamped;

  Eigen::Index rows() const { return weight.rows(); }

  MixtureParams row(Eigen::Index r) const {
    MixtureParams p;
    p.components.resize(weight.cols());
    for (Eigen::Index i = 0; i < weight.cols(); ++i)
      p.components[i] = {weight(r, i),  mean_x(r, i),  mean_y(r, i),
                         sigma_x(r, i), sigma_y(r, i), rho(r, i)};
    return p;
  }

  /// Allocation-free equivalent of sample_mixture(row(r), rng); draws the
  /// identical sample for the identical stream state.
  Eigen::Vector2d sample_row(Eigen::Index r, Pcg32& rng) const {
    const Eigen::Index n = weight.cols();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += weight(r, i);
    double u = rng.next_double();
    Eigen::Index pick = n - 1;
    double cum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      cum += weight(r, i);
      if (u * total < cum) {
        pick = i;
        break;
      }
    }
    double z1 = rng.normal();
    double z2 = rng.normal();
    double rr = rho(r, pick);
    return {mean_x(r, pick) + sigma_x(r, pick) * z1,
            mean_y(r, pick) +
                sigma_y(r, pick) * (rr * z1 + std::sqrt(1.0 - rr * rr) * z2)};
  }
};

/// Windowed displacement samples as matrices: X holds one flattened window
/// per row (interleaved dx0, dy0, dx1, dy1, ...), Y the next displacement.
struct TrainingData {
  Eigen::MatrixXd X;  // N x input_dim
  Eigen::MatrixXd Y;  // N x 2

  Eigen::Index size() const { return X.rows(); }
};

struct MdnGradients {
  Eigen::MatrixXd W1, W2, W3;
  Eigen::VectorXd b1, b2, b3;
};

/// Feed-forward mixture density network: input_dim -> h1 -> h2 -> 6*I with
/// ReLU on the hidden layers and a linear parameter head. Each component
/// occupies 6 consecutive head slots (weight logit, mean x/y, log sigma x/y,
/// rho pre-activation); the weight logits are softmaxed across components.
class MdnModel {
 public:
  MdnModel() = default;

  /// Hidden layers start at He-uniform fan-in scale; the parameter head is
  /// damped so the initial mixture stays close to the unit mixture instead
  /// of opening with wildly scattered sigmas.
  MdnModel(int input_dim, int hidden1, int hidden2, int components,
           std::uint64_t seed)
      : input_dim_(input_dim), h1_(hidden1), h2_(hidden2),
        components_(components), seed_(seed) {
    check_dims();
    Pcg32 rng(mix64(seed, 0x6d646eULL));
    W1_ = he_uniform(h1_, input_dim_, rng);
    W2_ = he_uniform(h2_, h1_, rng);
    W3_ = kHeadInitScale * he_uniform(6 * components_, h2_, rng);
    b1_ = Eigen::VectorXd::Zero(h1_);
    b2_ = Eigen::VectorXd::Zero(h2_);
    b3_ = Eigen::VectorXd::Zero(6 * components_);
  }

  /// All-zero weights and biases (softmax/exp/tanh of zero give uniform
  /// weights, zero means, unit sigmas, zero rho).
  static MdnModel zeros(int input_dim, int hidden1, int hidden2, int components) {
    MdnModel m(input_dim, hidden1, hidden2, components, 0);
    m.W1_.setZero();
    m.W2_.setZero();
    m.W3_.setZero();
    return m;
  }

  static MdnModel standard(std::uint64_t seed) { return MdnModel(64, 512, 128, 2, seed); }

  int input_dim() const { return input_dim_; }
  int window_len() const { return input_dim_ / 2; }
  int components() const { return components_; }
  int hidden1() const { return h1_; }
  int hidden2() const { return h2_; }
  std::uint64_t seed() const { return seed_; }
  const Scaler& scaler() const { return scaler_; }
  void set_scaler(const Scaler& s) { scaler_ = s; }

  Eigen::MatrixXd& W1() { return W1_; }
  Eigen::MatrixXd& W2() { return W2_; }
  Eigen::MatrixXd& W3() { return W3_; }
  Eigen::VectorXd& b1() { return b1_; }
  Eigen::VectorXd& b2() { return b2_; }
  Eigen::VectorXd& b3() { return b3_; }
  const Eigen::MatrixXd& W1() const { return W1_; }
  const Eigen::MatrixXd& W2() const { return W2_; }
  const Eigen::MatrixXd& W3() const { return W3_; }
  const Eigen::VectorXd& b1() const { return b1_; }
  const Eigen::VectorXd& b2() const { return b2_; }
  const Eigen::VectorXd& b3() const { return b3_; }

  /// Standardize a matrix of raw windows, one per row.
  Eigen::MatrixXd normalize_windows(const Eigen::MatrixXd& raw) const {
    Eigen::MatrixXd out(raw.rows(), raw.cols());
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
      bool is_x = (c % 2 == 0);
      double mean = is_x ? scaler_.mean_x : scaler_.mean_y;
      double sd = is_x ? scaler_.std_x : scaler_.std_y;
      out.col(c) = (raw.col(c).array() - mean) / sd;
    }
    return out;
  }

  Eigen::MatrixXd normalize_targets(const Eigen::MatrixXd& raw) const {
    Eigen::MatrixXd out(raw.rows(), 2);
    out.col(0) = (raw.col(0).array() - scaler_.mean_x) / scaler_.std_x;
    out.col(1) = (raw.col(1).array() - scaler_.mean_y) / scaler_.std_y;
    return out;
  }

  /// Scratch buffers for repeated batched forwards of the same shape; lets
  /// rollout loops avoid reallocating the large activation matrices.
  struct Workspace {
    Eigen::MatrixXd xn, z1, z2, z3;
  };

  /// Mixture parameters for a batch of raw windows (one per row).
  /// Parameters live in the scaler's normalized displacement space.
  MixtureBatch forward_batch(const Eigen::MatrixXd& raw_windows) const {
    Workspace ws;
    MixtureBatch mb;
    forward_batch(raw_windows, ws, mb);
    return mb;
  }

  void forward_batch(const Eigen::MatrixXd& raw_windows, Workspace& ws,
                     MixtureBatch& mb) const {
    if (raw_windows.cols() != input_dim_)
      throw std::invalid_argument("forward: window width != input_dim");
    if (!raw_windows.allFinite())
      throw std::invalid_argument("forward: non-finite input");
    const Eigen::Index n = raw_windows.rows();
    ws.xn.resize(n, input_dim_);
    for (Eigen::Index c = 0; c < raw_windows.cols(); ++c) {
      bool is_x = (c % 2 == 0);
      double mean = is_x ? scaler_.mean_x : scaler_.mean_y;
      double sd = is_x ? scaler_.std_x : scaler_.std_y;
      ws.xn.col(c) = (raw_windows.col(c).array() - mean) / sd;
    }
    ws.z1.resize(n, h1_);
    ws.z1.noalias() = ws.xn * W1_.transpose();
    ws.z1 = (ws.z1.rowwise() + b1_.transpose()).cwiseMax(0.0);
    ws.z2.resize(n, h2_);
    ws.z2.noalias() = ws.z1 * W2_.transpose();
    ws.z2 = (ws.z2.rowwise() + b2_.transpose()).cwiseMax(0.0);
    ws.z3.resize(n, 6 * components_);
    ws.z3.noalias() = ws.z2 * W3_.transpose();
    ws.z3.rowwise() += b3_.transpose();
    head_into(ws.z3, mb);
  }

  /// Single-window convenience wrapper.
  MixtureParams forward(const Eigen::VectorXd& window) const {
    Eigen::MatrixXd x(1, window.size());
    x.row(0) = window.transpose();
    return forward_batch(x).row(0);
  }

  /// Mean raw-space negative log-likelihood of (window, target) rows. The
  /// mixture density is evaluated in normalized space and corrected by the
  /// scaler Jacobian so values are comparable across scalers.
  double nll(const TrainingData& data) const {
    if (data.size() == 0) throw std::invalid_argument("nll: empty batch");
    MixtureBatch mb = forward_batch(data.X);
    Eigen::MatrixXd tn = normalize_targets(data.Y);
    double total = 0.0;
    for (Eigen::Index r = 0; r < data.size(); ++r)
      total += row_nll(mb, r, tn(r, 0), tn(r, 1), nullptr);
    return total / static_cast<double>(data.size()) + jacobian_correction();
  }

  /// Mean NLL and its exact gradient with respect to every weight.
  double nll_gradient(const TrainingData& data, MdnGradients& grads) const {
    if (data.size() == 0) throw std::invalid_argument("nll_gradient: empty batch");
    const Eigen::Index n = data.size();
    Eigen::MatrixXd xn = normalize_windows(data.X);
    Eigen::MatrixXd z1, h1a, z2, h2a, z3;
    forward_core_full(xn, z1, h1a, z2, h2a, z3);
    MixtureBatch mb = head(z3);
    Eigen::MatrixXd tn = normalize_targets(data.Y);

    Eigen::MatrixXd dz3 = Eigen::MatrixXd::Zero(n, 6 * components_);
    double total = 0.0;
    Eigen::RowVectorXd dz_row(6 * components_);
    for (Eigen::Index r = 0; r < n; ++r) {
      total += row_nll(mb, r, tn(r, 0), tn(r, 1), &dz_row);
      dz3.row(r) = dz_row;
    }
    dz3 /= static_cast<double>(n);

    grads.W3 = dz3.transpose() * h2a;
    grads.b3 = dz3.colwise().sum();
    Eigen::MatrixXd dh2 = dz3 * W3_;
    Eigen::MatrixXd dz2 = dh2.cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
    grads.W2 = dz2.transpose() * h1a;
    grads.b2 = dz2.colwise().sum();
    Eigen::MatrixXd dh1 = dz2 * W2_;
    Eigen::MatrixXd dz1 = dh1.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
    grads.W1 = dz1.transpose() * xn;
    grads.b1 = dz1.colwise().sum();
    return total / static_cast<double>(n) + jacobian_correction();
  }

 private:
  void check_dims() const {
    if (input_dim_ < 2 || input_dim_ % 2 != 0)
      throw std::invalid_argument("MdnModel: input_dim must be even and >= 2");
    if (h1_ < 1 || h2_ < 1 || components_ < 1)
      throw std::invalid_argument("MdnModel: invalid layer sizes");
  }

  static Eigen::MatrixXd he_uniform(int rows, int cols, Pcg32& rng) {
    double limit = std::sqrt(6.0 / cols);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
    return m;
  }

  double jacobian_correction() const {
    return std::log(scaler_.std_x * scaler_.std_y);
  }

  void forward_core_full(const Eigen::MatrixXd& xn, Eigen::MatrixXd& z1,
                         Eigen::MatrixXd& h1a, Eigen::MatrixXd& z2,
                         Eigen::MatrixXd& h2a, Eigen::MatrixXd& z3) const {
    z1 = (xn * W1_.transpose()).rowwise() + b1_.transpose();
    h1a = z1.cwiseMax(0.0);
    z2 = (h1a * W2_.transpose()).rowwise() + b2_.transpose();
    h2a = z2.cwiseMax(0.0);
    z3 = (h2a * W3_.transpose()).rowwise() + b3_.transpose();
  }

  MixtureBatch head(const Eigen::MatrixXd& z3) const {
    MixtureBatch mb;
    head_into(z3, mb);
    return mb;
  }

  void head_into(const Eigen::MatrixXd& z3, MixtureBatch& mb) const {
    const Eigen::Index n = z3.rows();
    const int I = components_;
    mb.weight.resize(n, I);
    mb.mean_x.resize(n, I);
    mb.mean_y.resize(n, I);
    mb.sigma_x.resize(n, I);
    mb.sigma_y.resize(n, I);
    mb.rho.resize(n, I);
    mb.tanh_rho.resize(n, I);
    mb.sigma_x_clamped.resize(n, I);
    mb.sigma_y_clamped.resize(n, I);
    for (Eigen::Index r = 0; r < n; ++r) {
      double max_logit = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < I; ++i) max_logit = std::max(max_logit, z3(r, 6 * i));
      double denom = 0.0;
      for (int i = 0; i < I; ++i) denom += std::exp(z3(r, 6 * i) - max_logit);
      for (int i = 0; i < I; ++i) {
        double soft = std::exp(z3(r, 6 * i) - max_logit) / denom;
        mb.weight(r, i) = (soft + kWeightFloor) / (1.0 + I * kWeightFloor);
        mb.mean_x(r, i) = z3(r, 6 * i + 1);
        mb.mean_y(r, i) = z3(r, 6 * i + 2);
        double lsx = z3(r, 6 * i + 3);
        double lsy = z3(r, 6 * i + 4);
        mb.sigma_x_clamped(r, i) = std::abs(lsx) > kLogSigmaClamp;
        mb.sigma_y_clamped(r, i) = std::abs(lsy) > kLogSigmaClamp;
        mb.sigma_x(r, i) = std::exp(std::clamp(lsx, -kLogSigmaClamp, kLogSigmaClamp));
        mb.sigma_y(r, i) = std::exp(std::clamp(lsy, -kLogSigmaClamp, kLogSigmaClamp));
        double t = std::tanh(z3(r, 6 * i + 5));
        mb.tanh_rho(r, i) = t;
        mb.rho(r, i) = kRhoScale * t;
      }
    }
  }

  /// Normalized-space NLL of one row; optionally writes d(nll)/d(head
  /// pre-activations) into *dz (length 6I). Gradient is zero where the
  /// density floor is active, matching the floored objective.
  double row_nll(const MixtureBatch& mb, Eigen::Index r, double tx, double ty,
                 Eigen::RowVectorXd* dz) const {
    const int I = components_;
    std::vector<double> log_terms(I);
    double max_term = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < I; ++i) {
      MixtureComponent c{mb.weight(r, i),  mb.mean_x(r, i),  mb.mean_y(r, i),
                         mb.sigma_x(r, i), mb.sigma_y(r, i), mb.rho(r, i)};
      log_terms[i] = std::log(c.weight) + log_gaussian2d(c, tx, ty);
      max_term = std::max(max_term, log_terms[i]);
    }
    double sum = 0.0;
    for (int i = 0; i < I; ++i) sum += std::exp(log_terms[i] - max_term);
    double log_p = max_term + std::log(sum);
    bool floored = !(log_p > std::log(kDensityFloor));
    double loss = floored ? -std::log(kDensityFloor) : -log_p;

    if (dz) {
      dz->setZero();
      if (!floored) {
        for (int i = 0; i < I; ++i) {
          double gamma = std::exp(log_terms[i] - log_p);
          double sx = mb.sigma_x(r, i), sy = mb.sigma_y(r, i);
          double rho = mb.rho(r, i);
          double zx = (tx - mb.mean_x(r, i)) / sx;
          double zy = (ty - mb.mean_y(r, i)) / sy;
          double c_inv = 1.0 / (1.0 - rho * rho);
          double q = zx * zx + zy * zy - 2.0 * rho * zx * zy;
          (*dz)(6 * i) = mb.weight(r, i) - gamma;
          (*dz)(6 * i + 1) = -gamma * c_inv * (zx - rho * zy) / sx;
          (*dz)(6 * i + 2) = -gamma * c_inv * (zy - rho * zx) / sy;
          (*dz)(6 * i + 3) = mb.sigma_x_clamped(r, i)
                                 ? 0.0
                                 : -gamma * (c_inv * zx * (zx - rho * zy) - 1.0);
          (*dz)(6 * i + 4) = mb.sigma_y_clamped(r, i)
                                 ? 0.0
                                 : -gamma * (c_inv * zy * (zy - rho * zx) - 1.0);
          double t = mb.tanh_rho(r, i);
          double dlogn_drho = rho * c_inv + c_inv * zx * zy - rho * c_inv * c_inv * q;
          (*dz)(6 * i + 5) = -gamma * dlogn_drho * kRhoScale * (1.0 - t * t);
        }
      }
    }
    return loss;
  }

  int input_dim_ = 64;
  int h1_ = 512;
  int h2_ = 128;
  int components_ = 2;
  std::uint64_t seed_ = 0;
  Eigen::MatrixXd W1_, W2_, W3_;
  Eigen::VectorXd b1_, b2_, b3_;
  Scaler scaler_;
};

/// Fit the model's scaler to the training targets (per-coordinate mean and
/// standard deviation, floored away from zero).
inline Scaler fit_scaler(const Eigen::MatrixXd& targets) {
  Scaler s;
  const double n = static_cast<double>(targets.rows());
  s.mean_x = targets.col(0).mean();
  s.mean_y = targets.col(1).mean();
  s.std_x = std::max(std::sqrt((targets.col(0).array() - s.mean_x).square().sum() / n),
                     1e-9);
  s.std_y = std::max(std::sqrt((targets.col(1).array() - s.mean_y).square().sum() / n),
                     1e-9);
  return s;
}

struct RmspropConfig {
  double learning_rate = 1e-3;
  double decay = 0.9;
  double epsilon = 1e-8;
};

struct RmspropState {
  Eigen::MatrixXd W1, W2, W3;
  Eigen::VectorXd b1, b2, b3;

  static RmspropState zeros_like(const MdnModel& m) {
    RmspropState s;
    s.W1 = Eigen::MatrixXd::Zero(m.W1().rows(), m.W1().cols());
    s.W2 = Eigen::MatrixXd::Zero(m.W2().rows(), m.W2().cols());
    s.W3 = Eigen::MatrixXd::Zero(m.W3().rows(), m.W3().cols());
    s.b1 = Eigen::VectorXd::Zero(m.b1().size());
    s.b2 = Eigen::VectorXd::Zero(m.b2().size());
    s.b3 = Eigen::VectorXd::Zero(m.b3().size());
    return s;
  }
};

inline void rmsprop_step(MdnModel& model, RmspropState& state,
                         const MdnGradients& g, const RmspropConfig& cfg) {
  auto update = [&](auto& w, auto& acc, const auto& grad) {
    acc = cfg.decay * acc.array() + (1.0 - cfg.decay) * grad.array().square();
    w.array() -= cfg.learning_rate * grad.array() / (acc.array().sqrt() + cfg.epsilon);
  };
  update(model.W1(), state.W1, g.W1);
  update(model.W2(), state.W2, g.W2);
  update(model.W3(), state.W3, g.W3);
  update(model.b1(), state.b1, g.b1);
  update(model.b2(), state.b2, g.b2);
  update(model.b3(), state.b3, g.b3);
}

/// Per-epoch loss curves; index 0 holds the pre-training losses.
struct TrainReport {
  std::vector<double> train_nll;
  std::vector<double> val_nll;
  bool batch_clamped = false;
};

struct TrainOptions {
  int epochs = 15;
  int batch_size = 512;
  RmspropConfig optimizer;
  double lr_epoch_decay = 1.0;  // learning rate multiplier applied per epoch
  std::uint64_t shuffle_seed = 1;
  bool refit_scaler = true;
};

/// Minibatch RMSprop on the mixture NLL. Deterministic for a fixed seed:
/// the shuffle order is the only source of randomness.
inline TrainReport train_mdn(MdnModel& model, const TrainingData& train,
                             const TrainingData& val, const TrainOptions& opts) {
  if (train.size() == 0) throw std::invalid_argument("train_mdn: empty training set");
  TrainReport report;
  int batch = opts.batch_size;
  if (batch > train.size()) {
    batch = static_cast<int>(train.size());
    report.batch_clamped = true;
    std::cerr << "train_mdn: batch size clamped to dataset size (" << batch << ")\n";
  }
  if (batch < 1) batch = 1;
  if (opts.refit_scaler) model.set_scaler(fit_scaler(train.Y));

  auto record = [&]() {
    report.train_nll.push_back(model.nll(train));
    report.val_nll.push_back(val.size() > 0 ? model.nll(val)
                                            : report.train_nll.back());
  };
  record();  // epoch 0

  RmspropState state = RmspropState::zeros_like(model);
  MdnGradients grads;
  TrainingData mini;
  RmspropConfig step_cfg = opts.optimizer;
  const Eigen::Index n = train.size();
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    if (epoch > 1) step_cfg.learning_rate *= opts.lr_epoch_decay;
    Pcg32 rng(mix64(opts.shuffle_seed, 0x65706f63ULL, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order = shuffled_indices(static_cast<std::size_t>(n), rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      Eigen::Index len = std::min<Eigen::Index>(batch, n - start);
      mini.X.resize(len, train.X.cols());
      mini.Y.resize(len, 2);
      for (Eigen::Index i = 0; i < len; ++i) {
        mini.X.row(i) = train.X.row(static_cast<Eigen::Index>(order[start + i]));
        mini.Y.row(i) = train.Y.row(static_cast<Eigen::Index>(order[start + i]));
      }
      model.nll_gradient(mini, grads);
      rmsprop_step(model, state, grads, step_cfg);
    }
    record();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Checkpoint format: versioned plain text, one matrix per block, values as
// %.17g so a round trip reproduces every weight bit-exactly.
// ---------------------------------------------------------------------------

inline constexpr const char* kCheckpointMagic = "vnfmig-mdn-checkpoint-v1";

namespace detail {
inline void write_matrix(std::ostream& os, const char* name,
                         const Eigen::MatrixXd& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[32];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      os << buf << (c + 1 == m.cols() ? '\n' : ' ');
    }
  }
}

inline Eigen::MatrixXd read_matrix(std::istream& is, const std::string& expect) {
  std::string name;
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> name >> rows >> cols) || name != expect)
    throw std::runtime_error("checkpoint: bad block header, expected " + expect);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      if (!(is >> m(r, c))) throw std::runtime_error("checkpoint: truncated " + expect);
  return m;
}
}  // namespace detail

inline void save_checkpoint(const MdnModel& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os << kCheckpointMagic << '\n';
  os << "dims " << model.input_dim() << ' ' << model.hidden1() << ' '
     << model.hidden2() << ' ' << model.components() << '\n';
  os << "seed " << model.seed() << '\n';
  char buf[160];
  std::snprintf(buf, sizeof buf, "scaler %.17g %.17g %.17g %.17g\n",
                model.scaler().mean_x, model.scaler().mean_y,
                model.scaler().std_x, model.scaler().std_y);
  os << buf;
  detail::write_matrix(os, "W1", model.W1());
  detail::write_matrix(os, "b1", model.b1());
  detail::write_matrix(os, "W2", model.W2());
  detail::write_matrix(os, "b2", model.b2());
  detail::write_matrix(os, "W3", model.W3());
  detail::write_matrix(os, "b3", model.b3());
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline MdnModel load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string magic;
  std::getline(is, magic);
  if (magic != kCheckpointMagic)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  std::string tag;
  int input_dim = 0, h1 = 0, h2 = 0, components = 0;
  std::uint64_t seed = 0;
  if (!(is >> tag >> input_dim >> h1 >> h2 >> components) || tag != "dims")
    throw std::runtime_error("load_checkpoint: bad dims line");
  if (!(is >> tag >> seed) || tag != "seed")
    throw std::runtime_error("load_checkpoint: bad seed line");
  Scaler scaler;
  if (!(is >> tag >> scaler.mean_x >> scaler.mean_y >> scaler.std_x >> scaler.std_y) ||
      tag != "scaler")
    throw std::runtime_error("load_checkpoint: bad scaler line");
  MdnModel model(input_dim, h1, h2, components, seed);
  model.set_scaler(scaler);
  model.W1() = detail::read_matrix(is, "W1");
  model.b1() = detail::read_matrix(is, "b1");
  model.W2() = detail::read_matrix(is, "W2");
  model.b2() = detail::read_matrix(is, "b2");
  model.W3() = detail::read_matrix(is, "W3");
  model.b3() = detail::read_matrix(is, "b3");
  if (model.W1().rows() != h1 || model.W1().cols() != input_dim)
    throw std::runtime_error("load_checkpoint: W1 shape mismatch");
  return model;
}

}  // namespace vnfmig
