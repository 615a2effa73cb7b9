#include <catch2/catch.hpp>

#include "vnfmig/config.hpp"

#include <filesystem>
#include <fstream>

using namespace vnfmig;

TEST_CASE("defaults describe the full-scale experiment") {
  ExperimentConfig cfg;
  CHECK(cfg.sim.population == 1000);
  CHECK(cfg.sim.region_side == 8000.0);
  CHECK(cfg.sim.ec.radius == 2000.0);
  CHECK(cfg.sim.econ.interval_steps == 30);
  CHECK(cfg.sim.evaluation_steps == 4000);
  CHECK(cfg.sim.preconvergence_steps == 250);
  CHECK(cfg.sim.training_steps == 500);
  CHECK(cfg.sim.mdn_epochs == 15);
  CHECK(cfg.sim.mdn_batch == 512);
  CHECK(cfg.sim.mdn_hidden1 == 512);
  CHECK(cfg.sim.mdn_hidden2 == 128);
  CHECK(cfg.bench.po_grid.size() == 9);
  CHECK(cfg.bench.pv_grid.size() == 9);
  CHECK(cfg.bench.n_seeds == 10);
  CHECK_NOTHROW(cfg.sim.validate());
}

TEST_CASE("applying every documented default is a no-op") {
  ExperimentConfig cfg;
  for (const auto& doc : config_key_docs())
    REQUIRE_NOTHROW(apply_config_value(cfg, doc.key, doc.default_value));
  ExperimentConfig fresh;
  CHECK(cfg.sim.population == fresh.sim.population);
  CHECK(cfg.sim.econ.sync_cost == fresh.sim.econ.sync_cost);
  CHECK(cfg.sim.n_rollouts == fresh.sim.n_rollouts);
  CHECK(cfg.sim.kernels.size() == fresh.sim.kernels.size());
  for (std::size_t i = 0; i < fresh.sim.kernels.size(); ++i) {
    CHECK(cfg.sim.kernels[i].mean_x == fresh.sim.kernels[i].mean_x);
    CHECK(cfg.sim.kernels[i].sigma_y == fresh.sim.kernels[i].sigma_y);
  }
  CHECK(cfg.sim.chain.transitions == fresh.sim.chain.transitions);
  CHECK(cfg.sim.chain.outage_states == fresh.sim.chain.outage_states);
  CHECK(cfg.bench.po_grid == fresh.bench.po_grid);
  CHECK_NOTHROW(cfg.sim.validate());
}

TEST_CASE("config files parse with comments and whitespace") {
  namespace fs = std::filesystem;
  auto path = fs::temp_directory_path() / "vnfmig_cfg_test.conf";
  {
    std::ofstream os(path);
    os << "# experiment overrides\n"
       << "sim.population = 123\n"
       << "econ.sync_cost=0.25   # inline comment\n"
       << "\n"
       << "  bench.po_grid = 0.2, 0.4 ,0.8\n"
       << "mdn.online_update = false\n";
  }
  auto cfg = load_config_file(path.string());
  fs::remove(path);
  CHECK(cfg.sim.population == 123);
  CHECK(cfg.sim.econ.sync_cost == 0.25);
  CHECK(cfg.bench.po_grid == std::vector<double>{0.2, 0.4, 0.8});
  CHECK_FALSE(cfg.sim.mdn_online_update);
  // untouched keys keep their defaults
  CHECK(cfg.sim.region_side == 8000.0);
}

TEST_CASE("unknown keys and malformed values are rejected") {
  ExperimentConfig cfg;
  CHECK_THROWS_AS(apply_config_value(cfg, "sim.populaton", "10"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(cfg, "sim.population", "ten"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(cfg, "mdn.online_update", "maybe"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(cfg, "sim.visit_reducer", "median"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(cfg, "sim.kernels", "1,2,3"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(cfg, "bench.po_grid", ""), ConfigError);

  namespace fs = std::filesystem;
  auto path = fs::temp_directory_path() / "vnfmig_cfg_bad.conf";
  {
    std::ofstream os(path);
    os << "just a line without equals\n";
  }
  CHECK_THROWS_AS(load_config_file(path.string()), ConfigError);
  fs::remove(path);
  CHECK_THROWS_AS(load_config_file("/nonexistent/vnfmig.conf"), ConfigError);
}

TEST_CASE("a reliability chain can be described in the config file") {
  ExperimentConfig cfg;
  apply_config_value(cfg, "chain.states", "up,down");
  apply_config_value(cfg, "chain.rows", "0.9 0.1; 0.4 0.6");
  apply_config_value(cfg, "chain.outage_states", "down");
  apply_config_value(cfg, "chain.initial_state", "up");
  CHECK_NOTHROW(cfg.sim.chain.validate());
  CHECK(cfg.sim.chain.size() == 2);
  CHECK(cfg.sim.chain.transitions(0, 1) == 0.9 * 0 + 0.1);
  CHECK(cfg.sim.chain.outage_states == std::vector<int>{1});
  CHECK(cfg.sim.chain.current_state == 0);

  CHECK_THROWS_AS(apply_config_value(cfg, "chain.rows", "0.9 0.1"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(cfg, "chain.outage_states", "sideways"),
                  ConfigError);
  CHECK_THROWS_AS(apply_config_value(cfg, "chain.initial_state", "sideways"),
                  ConfigError);
}

TEST_CASE("the desk-scale preset shrinks the expensive knobs") {
  ExperimentConfig cfg;
  apply_desk_scale(cfg);
  CHECK(cfg.sim.population == 200);
  CHECK(cfg.sim.evaluation_steps == 1000);
  CHECK(cfg.sim.n_rollouts == 32);
  // slow-dynamics reliability chain, same state topology
  CHECK(cfg.sim.chain.state_names ==
        std::vector<std::string>{"normal", "degraded", "outage", "repairing"});
  CHECK(cfg.sim.chain.transitions(2, 2) == 0.88);
  CHECK_NOTHROW(cfg.sim.chain.validate());
  // the geometry and horizon are unchanged
  CHECK(cfg.sim.region_side == 8000.0);
  CHECK(cfg.sim.ec.radius == 2000.0);
  CHECK(cfg.sim.econ.interval_steps == 30);
  CHECK(cfg.sim.preconvergence_steps == 250);
  CHECK(cfg.sim.training_steps == 500);
  CHECK_NOTHROW(cfg.sim.validate());
}
