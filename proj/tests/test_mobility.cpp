#include <catch2/catch.hpp>

#include "vnfmig/mobility.hpp"
#include "vnfmig/rng.hpp"

#include <cmath>

using namespace vnfmig;

namespace {

/// Model that ignores its input and always emits one fixed bivariate
/// Gaussian (zero weights; the head biases encode the component).
MdnModel constant_gaussian_model(double mx, double my, double sx, double sy,
                                 double rho, int input_dim = 4) {
  MdnModel model = MdnModel::zeros(input_dim, 3, 3, 1);
  model.b3()(1) = mx;
  model.b3()(2) = my;
  model.b3()(3) = std::log(sx);
  model.b3()(4) = std::log(sy);
  model.b3()(5) = std::atanh(rho / kRhoScale);
  return model;
}

UserContext still_user(const std::string& id, double x, double y, int n_positions) {
  UserContext ctx;
  ctx.user_id = id;
  for (int i = 0; i < n_positions; ++i) ctx.positions.emplace_back(x, y);
  return ctx;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Probability mass of a bivariate Gaussian inside a disc, reduced to a 1D
/// integral over x with the exact conditional normal in y; composite
/// Simpson quadrature.
double gaussian_disc_mass(double mx, double my, double sx, double sy, double rho,
                          const EcGeometry& ec, int n = 8192) {
  const double lo = ec.center_x - ec.radius, hi = ec.center_x + ec.radius;
  const double s_cond = sy * std::sqrt(1.0 - rho * rho);
  auto integrand = [&](double x) {
    double half = ec.radius * ec.radius - (x - ec.center_x) * (x - ec.center_x);
    if (half <= 0.0) return 0.0;
    double dy = std::sqrt(half);
    double m_cond = my + rho * sy * (x - mx) / sx;
    double zx = (x - mx) / sx;
    double phi_x = std::exp(-0.5 * zx * zx) / (sx * std::sqrt(2.0 * std::numbers::pi));
    return phi_x * (normal_cdf((ec.center_y + dy - m_cond) / s_cond) -
                    normal_cdf((ec.center_y - dy - m_cond) / s_cond));
  };
  double h = (hi - lo) / n;
  double sum = integrand(lo) + integrand(hi);
  for (int i = 1; i < n; ++i) sum += integrand(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("disc membership is boundary inclusive") {
  EcGeometry ec{0.0, 0.0, 100.0};
  CHECK(ec_contains(ec, 0.0, 0.0));
  CHECK(ec_contains(ec, 100.0, 0.0));
  CHECK(ec_contains(ec, 0.0, -100.0));
  CHECK_FALSE(ec_contains(ec, 101.0, 0.0));
  CHECK_FALSE(ec_contains(ec, 71.0, 71.0));  // just outside along the diagonal
}

TEST_CASE("a stationary user inside the EC stays visible") {
  auto model = constant_gaussian_model(0.0, 0.0, 1e-9, 1e-9, 0.0);
  EcGeometry ec{500.0, 500.0, 2000.0};
  auto pred = predict_visit_probabilities(model, still_user("u", 400, 400, 3), ec,
                                          /*horizon=*/6, /*n_rollouts=*/40, 7);
  REQUIRE(pred.probability.size() == 6);
  for (double p : pred.probability) CHECK(p == 1.0);
}

TEST_CASE("a stationary user far away never visits") {
  auto model = constant_gaussian_model(0.0, 0.0, 1e-9, 1e-9, 0.0);
  EcGeometry ec{0.0, 0.0, 2000.0};
  auto pred = predict_visit_probabilities(model, still_user("u", 100000, 0, 3), ec, 6,
                                          40, 7);
  for (double p : pred.probability) CHECK(p == 0.0);
}

TEST_CASE("one-step visit probability matches the disc-mass quadrature") {
  Pcg32 setup(515);
  for (int trial = 0; trial < 4; ++trial) {
    double mx = setup.uniform(-120.0, 120.0);
    double my = setup.uniform(-120.0, 120.0);
    double sx = setup.uniform(20.0, 80.0);
    double sy = setup.uniform(20.0, 80.0);
    double rho = setup.uniform(-0.6, 0.6);
    EcGeometry ec{setup.uniform(-150.0, 150.0), setup.uniform(-150.0, 150.0),
                  setup.uniform(60.0, 160.0)};

    double expected = gaussian_disc_mass(mx, my, sx, sy, rho, ec);
    auto model = constant_gaussian_model(mx, my, sx, sy, rho);
    const int n = 20000;
    auto pred = predict_visit_probabilities(model, still_user("cal", 0, 0, 3), ec, 1,
                                            n, 1000 + static_cast<std::uint64_t>(trial));
    double se = std::sqrt(std::max(expected * (1.0 - expected), 1e-9) / n);
    INFO("trial " << trial << " expected " << expected << " got "
                  << pred.probability[0] << " se " << se);
    REQUIRE(pred.probability[0] == Approx(expected).margin(3.0 * se + 1e-4));
  }
}

TEST_CASE("probabilities are valid and reproducible by seed") {
  auto model = constant_gaussian_model(20.0, -10.0, 50.0, 40.0, 0.2);
  EcGeometry ec{100.0, 0.0, 300.0};
  auto ctx = still_user("rep", 0, 0, 3);
  auto a = predict_visit_probabilities(model, ctx, ec, 8, 200, 99);
  auto b = predict_visit_probabilities(model, ctx, ec, 8, 200, 99);
  REQUIRE(a.probability == b.probability);
  for (double p : a.probability) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  auto c = predict_visit_probabilities(model, ctx, ec, 8, 200, 100);
  CHECK(a.probability != c.probability);  // different stream, different paths
}

TEST_CASE("batch prediction equals per-user prediction") {
  auto model = constant_gaussian_model(10.0, 5.0, 60.0, 45.0, -0.3);
  EcGeometry ec{50.0, 80.0, 250.0};
  std::vector<UserContext> users;
  users.push_back(still_user("alpha", 0, 0, 3));
  users.push_back(still_user("beta", -200, 100, 5));
  UserContext moving;
  moving.user_id = "gamma";
  for (int i = 0; i < 6; ++i) moving.positions.emplace_back(30.0 * i, -20.0 * i);
  users.push_back(moving);

  auto batch = predict_visit_probabilities_batch(model, users, ec, 5, 64, 31337);
  REQUIRE(batch.size() == 3);
  for (std::size_t u = 0; u < users.size(); ++u) {
    auto single = predict_visit_probabilities(model, users[u], ec, 5, 64, 31337);
    INFO("user " << users[u].user_id);
    REQUIRE(single.probability == batch[u].probability);
  }
}

TEST_CASE("short histories are zero padded and flagged") {
  auto model = constant_gaussian_model(0.0, 0.0, 30.0, 30.0, 0.0);
  EcGeometry ec{0.0, 0.0, 500.0};
  auto fresh = predict_visit_probabilities(model, still_user("new", 0, 0, 1), ec, 3,
                                           32, 5);
  CHECK(fresh.padded_history);
  auto seasoned = predict_visit_probabilities(model, still_user("old", 0, 0, 3), ec, 3,
                                              32, 5);
  CHECK_FALSE(seasoned.padded_history);

  UserContext empty;
  empty.user_id = "void";
  CHECK_THROWS_AS(predict_visit_probabilities(model, empty, ec, 3, 32, 5),
                  std::invalid_argument);
}

TEST_CASE("prediction arguments are validated") {
  auto model = constant_gaussian_model(0.0, 0.0, 30.0, 30.0, 0.0);
  EcGeometry ec{0.0, 0.0, 500.0};
  auto ctx = still_user("v", 0, 0, 3);
  CHECK_THROWS_AS(predict_visit_probabilities(model, ctx, ec, 0, 32, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(predict_visit_probabilities(model, ctx, ec, 3, 0, 5),
                  std::invalid_argument);
}

TEST_CASE("splitting the budget across seeds does not bias the estimate") {
  auto model = constant_gaussian_model(0.0, 0.0, 70.0, 70.0, 0.0);
  EcGeometry ec{50.0, -30.0, 90.0};
  double expected = gaussian_disc_mass(0.0, 0.0, 70.0, 70.0, 0.0, ec);
  auto ctx = still_user("split", 0, 0, 3);

  // 20 seeds x 500 rollouts vs one pooled confidence band
  const int n_seeds = 20, per_seed = 500;
  double mean = 0.0;
  for (int s = 0; s < n_seeds; ++s)
    mean += predict_visit_probabilities(model, ctx, ec, 1, per_seed,
                                        400 + static_cast<std::uint64_t>(s))
                .probability[0];
  mean /= n_seeds;
  double pooled_se =
      std::sqrt(expected * (1.0 - expected) / (n_seeds * per_seed));
  CHECK(mean == Approx(expected).margin(4.0 * pooled_se));
}

TEST_CASE("monte carlo error shrinks with the rollout budget") {
  auto model = constant_gaussian_model(0.0, 0.0, 80.0, 80.0, 0.0);
  EcGeometry ec{60.0, 0.0, 100.0};
  double expected = gaussian_disc_mass(0.0, 0.0, 80.0, 80.0, 0.0, ec);
  auto ctx = still_user("mc", 0, 0, 3);

  auto coarse = predict_visit_probabilities(model, ctx, ec, 1, 1000, 7);
  auto fine = predict_visit_probabilities(model, ctx, ec, 1, 50000, 7);
  double se_coarse = std::sqrt(expected * (1.0 - expected) / 1000);
  double se_fine = std::sqrt(expected * (1.0 - expected) / 50000);
  CHECK(coarse.probability[0] == Approx(expected).margin(4.0 * se_coarse));
  CHECK(fine.probability[0] == Approx(expected).margin(4.0 * se_fine + 1e-4));
}
