#include <catch2/catch.hpp>

#include "vnfmig/reliability.hpp"
#include "vnfmig/rng.hpp"

#include <cmath>

using namespace vnfmig;

namespace {

ReliabilityChain two_state(double p01, double p10,
                           std::vector<int> outage = {1}) {
  ReliabilityChain c;
  c.state_names = {"up", "down"};
  c.transitions.resize(2, 2);
  c.transitions << 1.0 - p01, p01, p10, 1.0 - p10;
  c.outage_states = std::move(outage);
  c.current_state = 0;
  return c;
}

ReliabilityChain random_chain(int n_states, Pcg32& rng) {
  ReliabilityChain c;
  c.transitions.resize(n_states, n_states);
  for (int i = 0; i < n_states; ++i) {
    c.state_names.push_back("s" + std::to_string(i));
    double row_sum = 0.0;
    for (int j = 0; j < n_states; ++j) {
      double w = -std::log(1.0 - rng.next_double());
      c.transitions(i, j) = w;
      row_sum += w;
    }
    for (int j = 0; j < n_states; ++j) c.transitions(i, j) /= row_sum;
    // renormalize exactly so validate()'s 1e-9 row-sum check is safe
    c.transitions.row(i) /= c.transitions.row(i).sum();
  }
  int n_outage = 1 + rng.uniform_int(n_states - 1);
  for (int s = 0; s < n_outage; ++s) c.outage_states.push_back(s);
  c.current_state = rng.uniform_int(n_states);
  return c;
}

/// Independent route: explicit matrix power, then one row lookup.
double matrix_power_outage(const ReliabilityChain& c, int from, int k) {
  Eigen::MatrixXd pk = Eigen::MatrixXd::Identity(c.size(), c.size());
  for (int i = 0; i < k; ++i) pk = pk * c.transitions;
  double p = 0.0;
  for (int s : c.outage_states) p += pk(from, s);
  return p;
}

}  // namespace

TEST_CASE("step with an identity transition matrix never moves") {
  auto chain = two_state(0.0, 0.0);
  Pcg32 rng(1);
  for (int i = 0; i < 100; ++i) CHECK(step(chain, rng) == 0);
}

TEST_CASE("step follows a deterministic row") {
  auto chain = two_state(1.0, 1.0);
  Pcg32 rng(2);
  CHECK(step(chain, rng) == 1);
  CHECK(step(chain, rng) == 0);
  CHECK(step(chain, rng) == 1);
}

TEST_CASE("step frequencies match the transition row") {
  auto chain = two_state(0.1, 0.5);
  Pcg32 rng(3);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    chain.current_state = 0;
    hits += step(chain, rng) == 1 ? 1 : 0;
  }
  double freq = static_cast<double>(hits) / n;
  CHECK(freq == Approx(0.1).margin(0.005));  // 3 sigma ~ 0.0028
}

TEST_CASE("outage_probability on the worked two-state chain") {
  auto chain = two_state(0.1, 0.5);
  CHECK(outage_probability(chain, 0, 1) == Approx(0.1).epsilon(1e-12));
  CHECK(outage_probability(chain, 0, 2) == Approx(0.14).epsilon(1e-12));
  CHECK_THROWS_AS(outage_probability(chain, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(outage_probability(chain, 5, 1), std::invalid_argument);
}

TEST_CASE("an absorbing outage state stays at probability one") {
  auto chain = two_state(0.1, 0.0);
  for (int k : {1, 2, 10, 100})
    CHECK(outage_probability(chain, 1, k) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("outage_horizon matches the per-step probabilities") {
  auto chain = two_state(0.1, 0.5);
  auto h1 = outage_horizon(chain, 1);
  REQUIRE(h1.size() == 1);
  CHECK(h1[0] == outage_probability(chain, 0, 1));

  auto h2 = outage_horizon(chain, 2);
  CHECK(h2[0] == Approx(0.1).epsilon(1e-12));
  CHECK(h2[1] == Approx(0.14).epsilon(1e-12));
  CHECK_THROWS_AS(outage_horizon(chain, 0), std::invalid_argument);
}

TEST_CASE("a chain with identical rows is stationary from the first step") {
  ReliabilityChain c;
  c.state_names = {"a", "b"};
  c.transitions.resize(2, 2);
  c.transitions << 0.7, 0.3, 0.7, 0.3;
  c.outage_states = {1};
  c.current_state = 0;
  auto horizon = outage_horizon(c, 25);
  auto pi = stationary_distribution(c);
  for (double p : horizon) CHECK(p == Approx(pi(1)).epsilon(1e-12));
}

TEST_CASE("outage_probability matches an explicit matrix-power oracle") {
  Pcg32 rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    auto chain = random_chain(2 + rng.uniform_int(4), rng);
    chain.validate();
    int k = 1 + rng.uniform_int(50);
    int from = rng.uniform_int(chain.size());
    double expect = matrix_power_outage(chain, from, k);
    REQUIRE(outage_probability(chain, from, k) == Approx(expect).margin(1e-10));
  }
}

TEST_CASE("Chapman-Kolmogorov composition") {
  Pcg32 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto chain = random_chain(3 + rng.uniform_int(3), rng);
    int a = 1 + rng.uniform_int(10);
    int b = 1 + rng.uniform_int(10);
    int from = rng.uniform_int(chain.size());

    Eigen::RowVectorXd dist = Eigen::RowVectorXd::Zero(chain.size());
    dist(from) = 1.0;
    for (int i = 0; i < a; ++i) dist = dist * chain.transitions;
    double composed = 0.0;
    for (int s = 0; s < chain.size(); ++s) {
      if (dist(s) == 0.0) continue;
      composed += dist(s) * outage_probability(chain, s, b);
    }
    REQUIRE(outage_probability(chain, from, a + b) == Approx(composed).margin(1e-10));
  }
}

TEST_CASE("long-run outage probability converges to the stationary mass") {
  Pcg32 rng(11);
  auto chain = random_chain(4, rng);
  auto pi = stationary_distribution(chain);
  double mass = 0.0;
  for (int s : chain.outage_states) mass += pi(s);
  CHECK(outage_probability(chain, 0, 10000) == Approx(mass).margin(1e-6));
}

TEST_CASE("chain validation rejects malformed inputs") {
  auto ok = two_state(0.1, 0.5);
  CHECK_NOTHROW(ok.validate());

  auto bad_sum = ok;
  bad_sum.transitions(0, 0) = 0.95;  // row sums to 1.05
  CHECK_THROWS_AS(bad_sum.validate(), std::invalid_argument);

  auto no_outage = ok;
  no_outage.outage_states.clear();
  CHECK_THROWS_AS(no_outage.validate(), std::invalid_argument);

  auto all_outage = ok;
  all_outage.outage_states = {0, 1};
  CHECK_THROWS_AS(all_outage.validate(), std::invalid_argument);

  auto bad_state = ok;
  bad_state.current_state = 9;
  CHECK_THROWS_AS(bad_state.validate(), std::invalid_argument);
}

TEST_CASE("the default chain is a valid four-state model") {
  auto chain = ReliabilityChain::default_chain();
  CHECK_NOTHROW(chain.validate());
  CHECK(chain.size() == 4);
  CHECK(chain.is_outage(2));
  CHECK_FALSE(chain.is_outage(0));
  // degradation makes near-term risk from "degraded" higher than from "normal"
  CHECK(outage_probability(chain, 1, 1) > outage_probability(chain, 0, 1));
}
