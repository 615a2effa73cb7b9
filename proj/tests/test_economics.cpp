#include <catch2/catch.hpp>

#include "vnfmig/economics.hpp"
#include "vnfmig/rng.hpp"

#include <cmath>
#include <vector>

using namespace vnfmig;

namespace {

bool rel_eq(double a, double b, double tol = 1e-12) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<OutageExposure> make_exposures(const std::vector<double>& t_values) {
  std::vector<OutageExposure> out;
  for (std::size_t i = 0; i < t_values.size(); ++i)
    out.push_back({"u" + std::to_string(i), t_values[i]});
  return out;
}

}  // namespace

TEST_CASE("expected_outage_exposure sums elementwise products") {
  std::vector<double> zeros{0, 0, 0}, ones3{1, 1, 1};
  CHECK(expected_outage_exposure(zeros, ones3) == 0.0);

  std::vector<double> ones2{1, 1};
  CHECK(expected_outage_exposure(ones2, ones2) == 2.0);

  std::vector<double> po{0.5, 0.2}, pv{0.4, 0.5};
  CHECK(expected_outage_exposure(po, pv) == Approx(0.3).epsilon(1e-12));
}

TEST_CASE("expected_outage_exposure validates inputs") {
  std::vector<double> a{0.5, 0.5}, b{0.5};
  CHECK_THROWS_AS(expected_outage_exposure(a, b), std::invalid_argument);
  std::vector<double> bad{1.5, 0.5};
  CHECK_THROWS_AS(expected_outage_exposure(bad, a), std::invalid_argument);
  std::vector<double> neg{-0.1, 0.5};
  CHECK_THROWS_AS(expected_outage_exposure(a, neg), std::invalid_argument);
  std::vector<double> empty;
  CHECK_THROWS_AS(expected_outage_exposure(empty, empty), std::invalid_argument);
}

TEST_CASE("cost_loss_sum evaluates the expected cost plus loss") {
  SECTION("no action is pure loss") {
    EconomicParams params{1.0, 10.0, 0.5, 30};
    auto exposures = make_exposures({2.0, 3.0});
    MigrationDecision d;  // m=0, no sync
    CHECK(cost_loss_sum(d, exposures, params) == Approx(5.0));
  }
  SECTION("full sync zeroes the loss term") {
    EconomicParams params{1.0, 10.0, 1.0, 30};
    auto exposures = make_exposures({7.0, 1.0, 2.5, 0.1});
    MigrationDecision d{true, {"u0", "u1", "u2", "u3"}};
    CHECK(cost_loss_sum(d, exposures, params) == Approx(14.0));
  }
  SECTION("mixed plan") {
    EconomicParams params{1.0, 5.0, 1.0, 30};
    std::vector<OutageExposure> exposures{{"a", 3.0}, {"b", 0.5}};
    MigrationDecision d{true, {"a"}};
    CHECK(cost_loss_sum(d, exposures, params) == Approx(6.5));
  }
  SECTION("unknown user in the sync set") {
    EconomicParams params;
    auto exposures = make_exposures({1.0});
    MigrationDecision d{true, {"ghost"}};
    CHECK_THROWS_AS(cost_loss_sum(d, exposures, params), std::invalid_argument);
  }
}

TEST_CASE("migration_bound and its sync rule") {
  SECTION("no users") {
    EconomicParams params{1.0, 7.5, 0.5, 30};
    auto mb = migration_bound({}, params);
    CHECK(mb.bound == 7.5);
    CHECK(mb.sync_set.empty());
  }
  SECTION("tie joins the sync set") {
    EconomicParams params{1.0, 2.0, 1.0, 30};
    std::vector<OutageExposure> exposures{{"a", 1.0}};
    auto mb = migration_bound(exposures, params);
    CHECK(mb.sync_set.count("a") == 1);
    CHECK(mb.bound == Approx(3.0));
  }
  SECTION("hand-evaluated instance") {
    EconomicParams params{1.0, 5.0, 1.0, 30};
    std::vector<OutageExposure> exposures{{"a", 3.0}, {"b", 0.5}};
    auto mb = migration_bound(exposures, params);
    CHECK(mb.bound == Approx(6.5));
    CHECK(mb.sync_set == std::set<std::string>{"a"});
  }
}

TEST_CASE("no_migration_bound is the raw expected loss") {
  EconomicParams params{2.0, 10.0, 0.5, 30};
  CHECK(no_migration_bound({}, params) == 0.0);
  CHECK(no_migration_bound(make_exposures({1, 1, 1}), params) == Approx(6.0));
  EconomicParams unit{1.0, 10.0, 0.5, 30};
  CHECK(no_migration_bound(make_exposures({3.0, 0.5}), unit) == Approx(3.5));
}

TEST_CASE("bounds are achieved exactly by their stated plans") {
  Pcg32 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    int n = rng.uniform_int(11);
    EconomicParams params;
    params.loss_rate = std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
    params.migration_cost = std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
    params.sync_cost = std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
    std::vector<OutageExposure> exposures;
    for (int i = 0; i < n; ++i)
      exposures.push_back({"u" + std::to_string(i), rng.uniform(0.0, 30.0)});

    auto mb = migration_bound(exposures, params);
    MigrationDecision migrate_plan{true, mb.sync_set};
    REQUIRE(rel_eq(cost_loss_sum(migrate_plan, exposures, params), mb.bound));

    MigrationDecision stay_plan;  // m=0, empty sync
    REQUIRE(rel_eq(cost_loss_sum(stay_plan, exposures, params),
                   no_migration_bound(exposures, params)));
  }
}

TEST_CASE("every plan is bounded below by the better bound") {
  Pcg32 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + rng.uniform_int(10);
    EconomicParams params;
    params.loss_rate = std::exp(rng.uniform(std::log(0.05), std::log(5.0)));
    params.migration_cost = std::exp(rng.uniform(std::log(0.05), std::log(5.0)));
    params.sync_cost = std::exp(rng.uniform(std::log(0.05), std::log(5.0)));
    std::vector<OutageExposure> exposures;
    for (int i = 0; i < n; ++i)
      exposures.push_back({"u" + std::to_string(i), rng.uniform(0.0, 30.0)});

    double floor = std::min(migration_bound(exposures, params).bound,
                            no_migration_bound(exposures, params));
    MigrationDecision d;
    d.migrate = rng.next_double() < 0.5;
    for (const auto& e : exposures)
      if (rng.next_double() < 0.5) d.sync_set.insert(e.user_id);
    double sum = cost_loss_sum(d, exposures, params);
    REQUIRE(sum >= floor - 1e-9 * std::max(1.0, floor));
  }
}

TEST_CASE("bounds are monotone in any single exposure") {
  Pcg32 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 1 + rng.uniform_int(8);
    EconomicParams params;
    params.loss_rate = rng.uniform(0.1, 5.0);
    params.migration_cost = rng.uniform(0.1, 5.0);
    params.sync_cost = rng.uniform(0.1, 5.0);
    std::vector<OutageExposure> exposures;
    for (int i = 0; i < n; ++i)
      exposures.push_back({"u" + std::to_string(i), rng.uniform(0.0, 10.0)});

    double mig0 = migration_bound(exposures, params).bound;
    double stay0 = no_migration_bound(exposures, params);
    int bump = rng.uniform_int(n);
    exposures[static_cast<std::size_t>(bump)].exposure += rng.uniform(0.0, 5.0);
    CHECK(migration_bound(exposures, params).bound >= mig0 - 1e-12);
    CHECK(no_migration_bound(exposures, params) >= stay0 - 1e-12);
  }
}

TEST_CASE("common scaling of all monetary constants") {
  Pcg32 rng(5150);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + rng.uniform_int(8);
    EconomicParams params;
    params.loss_rate = rng.uniform(0.1, 3.0);
    params.migration_cost = rng.uniform(0.1, 3.0);
    params.sync_cost = rng.uniform(0.1, 3.0);
    std::vector<OutageExposure> exposures;
    for (int i = 0; i < n; ++i)
      exposures.push_back({"u" + std::to_string(i), rng.uniform(0.0, 10.0)});

    double factor = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    EconomicParams scaled = params;
    scaled.loss_rate *= factor;
    scaled.migration_cost *= factor;
    scaled.sync_cost *= factor;

    auto mb = migration_bound(exposures, params);
    auto mb_scaled = migration_bound(exposures, scaled);
    REQUIRE(rel_eq(mb_scaled.bound, factor * mb.bound, 1e-9));
    REQUIRE(mb_scaled.sync_set == mb.sync_set);
    REQUIRE(rel_eq(no_migration_bound(exposures, scaled),
                   factor * no_migration_bound(exposures, params), 1e-9));

    bool migrate_before = mb.bound < no_migration_bound(exposures, params);
    bool migrate_after = mb_scaled.bound < no_migration_bound(exposures, scaled);
    REQUIRE(migrate_before == migrate_after);
  }
}

TEST_CASE("parameter validation") {
  EconomicParams bad;
  bad.loss_rate = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  EconomicParams bad_t;
  bad_t.interval_steps = 0;
  CHECK_THROWS_AS(bad_t.validate(), std::invalid_argument);
}
