#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "spdalp/errors.hpp"
#include "spdalp/experiment.hpp"
#include "spdalp/format.hpp"
#include "spdalp/mdp_io.hpp"

using namespace spdalp;
using namespace spdalp::testing;
using doctest::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("spdalp_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_config() {
  return json::parse(R"({
    "env": {"queue": {"L": 10, "rho": 0.5, "gamma": 0.95}},
    "features": {"mode": "exact"},
    "spd": {"T": 300, "eta": "inv-sqrt", "beta": "T-quarter", "R": 100, "stride": 50},
    "penalty": {"T": 300, "omega": [1, 10], "R": 100, "gradient": "sampled", "stride": 50},
    "trials": 4,
    "seed": 5,
    "jobs": 3,
    "oracle": {"resolution": 20}
  })");
}

// Deterministic 2-cycle with one action, written to disk.
fs::path write_cycle(const fs::path& dir) {
  Matrix p(2, 2);
  p << 0, 1, 1, 0;
  Vector alpha(2);
  alpha << 1, 0;
  write_mdp(Mdp({p}, Matrix::Ones(1, 2), 1.0, alpha), dir / "cycle.json");
  return dir / "cycle.json";
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig cfg = config_from_json(small_config());
  REQUIRE(cfg.queue);
  CHECK(cfg.queue->buffer == 10);
  CHECK(cfg.queue->gamma == 0.95);
  REQUIRE(cfg.spd);
  CHECK(cfg.spd->iterations == 300);
  CHECK(cfg.spd->beta.t_quarter);
  CHECK(cfg.spd->eta.schedule == StepSchedule::inv_sqrt);
  REQUIRE(cfg.penalty);
  CHECK(cfg.penalty_omegas == std::vector<double>{1.0, 10.0});
  CHECK(cfg.penalty->gradient == PenaltyGradient::sampled);
  CHECK(cfg.trials == 4);
  CHECK(cfg.oracle_resolution == 20);

  json bad = small_config();
  bad["trials"] = 0;
  CHECK_THROWS_AS(config_from_json(bad), DomainError);
  bad = small_config();
  bad["penalty"].erase("omega");
  CHECK_THROWS_AS(config_from_json(bad), DomainError);
  bad = small_config();
  bad.erase("env");
  CHECK_THROWS_AS(config_from_json(bad), DomainError);
  bad = small_config();
  bad["spd"]["eta"] = "sometimes";
  CHECK_THROWS_AS(config_from_json(bad), DomainError);

  json none = small_config();
  none.erase("spd");
  none.erase("penalty");
  const ExperimentConfig empty = config_from_json(none);
  const Environment env = load_environment(empty);
  CHECK_THROWS_AS(run_trials(empty, env, load_features(empty, env)), DomainError);
}

TEST_CASE("oracle_grid_search") {
  Rng rng(1);
  const Mdp mdp = random_mdp(3, 2, 0.9, rng);
  SUBCASE("one policy") {
    const std::vector<RandomizedPolicy> base{random_policy(3, 2, rng)};
    const GridOracleResult r = oracle_grid_search(mdp, base, 10);
    CHECK(r.omega(0) == 1.0);
    CHECK(r.cost == Approx(policy_cost(mdp, occupation_measure(mdp, base[0]))).epsilon(1e-14));
  }
  SUBCASE("identical policies tie towards the first") {
    const RandomizedPolicy pi = random_policy(3, 2, rng);
    const std::vector<RandomizedPolicy> base{pi, pi, pi};
    const GridOracleResult r = oracle_grid_search(mdp, base, 6);
    CHECK(r.grid_points == 28);
    CHECK(r.omega(0) == 1.0);
  }
  SUBCASE("matches a direct sweep") {
    const std::vector<RandomizedPolicy> base{random_policy(3, 2, rng), random_policy(3, 2, rng)};
    const GridOracleResult r = oracle_grid_search(mdp, base, 50);
    double best = INFINITY;
    for (int i = 0; i <= 50; ++i) {
      Vector w(2);
      w << i / 50.0, 1.0 - i / 50.0;
      best = std::min(best, policy_cost(mdp, occupation_measure(mdp, mixture_policy(base, w))));
    }
    CHECK(r.cost == Approx(best).epsilon(1e-14));
    CHECK(r.grid_points == 51);
  }
  SUBCASE("limits") {
    const std::vector<RandomizedPolicy> four(4, random_policy(3, 2, rng));
    CHECK_THROWS_AS(oracle_grid_search(mdp, four, 10), UnsupportedError);
    const std::vector<RandomizedPolicy> two(2, random_policy(3, 2, rng));
    CHECK_THROWS_AS(oracle_grid_search(mdp, two, 1), DomainError);
  }
}

TEST_CASE("summaries") {
  const std::vector<double> v{1.0, 2.0, 4.0, 7.0};
  const StatSummary s = summarize(v);
  CHECK(s.mean == Approx(3.5));
  // Sample variance: (6.25 + 2.25 + 0.25 + 12.25)/3 = 7.
  CHECK(s.sd == Approx(std::sqrt(7.0)));
  CHECK(s.ci95 == Approx(1.96 * std::sqrt(7.0) / 2.0));
  const std::vector<double> one{3.0};
  CHECK(summarize(one).sd == 0.0);
}

TEST_CASE("run_experiment bundle") {
  const fs::path out = scratch("bundle");
  ExperimentConfig cfg = config_from_json(small_config());
  const ExperimentResult res = run_experiment(cfg, out);
  CHECK(res.ok);
  REQUIRE(res.solvers.size() == 3);
  CHECK(res.solvers[0].name == "spd");
  CHECK(res.solvers[1].name == "penalty_w1");
  REQUIRE(res.oracle);
  for (const char* f : {"config.json", "manifest.json", "bundle.json", "finals.csv", "spd_summary.csv",
                        "spd/trial_000.csv", "penalty_w10/trial_003.csv"}) {
    CHECK_MESSAGE(fs::exists(out / f), f);
  }

  SUBCASE("trials share seeds across solvers") {
    for (const SolverResult& sr : res.solvers) {
      for (std::size_t k = 0; k < sr.trials.size(); ++k) CHECK(sr.trials[k].seed == 5 + k);
    }
  }

  SUBCASE("summary matches an independent pass over the trace files") {
    std::vector<std::vector<TraceRecord>> traces;
    for (int k = 0; k < 4; ++k) traces.push_back(read_trace_csv(out / "spd" / ("trial_00" + std::to_string(k) + ".csv")));
    std::ifstream in(out / "spd_summary.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("t,objective_mean,objective_sd,objective_ci95,violation_mean", 0) == 0);
    std::size_t row = 0;
    while (std::getline(in, line)) {
      std::vector<double> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
      REQUIRE(cells.size() == 13);
      double mean = 0.0;
      for (const auto& t : traces) mean += t[row].avg_objective;
      mean /= 4.0;
      double var = 0.0;
      for (const auto& t : traces) var += (t[row].avg_objective - mean) * (t[row].avg_objective - mean);
      const double sd = std::sqrt(var / 3.0);
      CHECK(cells[0] == traces[0][row].t);
      CHECK(std::abs(cells[7] - mean) <= 1e-12 * std::max(1.0, std::abs(mean)));
      CHECK(std::abs(cells[8] - sd) <= 1e-12 * std::max(1.0, sd));
      CHECK(std::abs(cells[9] - 1.96 * sd / 2.0) <= 1e-12 * std::max(1.0, sd));
      ++row;
    }
    CHECK(row == 6);  // ⌈300/50⌉
  }

  SUBCASE("manifest lists and protects every file") {
    const json manifest = json::parse(slurp(out / "manifest.json"));
    std::size_t listed = manifest["files"].size();
    std::size_t on_disk = 0;
    for (const auto& e : fs::recursive_directory_iterator(out)) {
      if (e.is_regular_file() && e.path().filename() != "manifest.json") ++on_disk;
    }
    CHECK(listed == on_disk);
    CHECK(manifest["seeds"].size() == 4);
    CHECK(manifest["input_hash"].get<std::string>().size() == 40);
    CHECK(verify_manifest(out).empty());
    std::ofstream(out / "spd" / "trial_002.csv", std::ios::app) << "9,9,9,9,9,9\n";
    const auto bad = verify_manifest(out);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0] == "spd/trial_002.csv");
  }

  SUBCASE("reruns are byte-identical, whatever the job count") {
    const fs::path again = scratch("bundle_again");
    cfg.jobs = 1;
    run_experiment(cfg, again);
    for (const char* f : {"spd_summary.csv", "penalty_w1_summary.csv", "spd/trial_001.csv", "finals.csv", "bundle.json"}) {
      CHECK_MESSAGE(slurp(out / f) == slurp(again / f), f);
    }
  }
}

TEST_CASE("smoke run has one row per solver") {
  json j = small_config();
  j["spd"]["T"] = 1;
  j["penalty"]["T"] = 1;
  j["penalty"]["omega"] = 10;
  j["trials"] = 1;
  const fs::path out = scratch("smoke");
  const ExperimentResult res = run_experiment(config_from_json(j), out);
  CHECK(res.ok);
  CHECK(read_trace_csv(out / "spd" / "trial_000.csv").size() == 1);
  CHECK(read_trace_csv(out / "penalty_w10" / "trial_000.csv").size() == 1);
}

TEST_CASE("git blob hashes") {
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("features_histogram") {
  const fs::path dir = scratch("hist");
  json j = {{"env", {{"mdp", write_cycle(dir).string()}, {"base_policies", json::array({policy_to_json(RandomizedPolicy::uniform(2, 1))})}}},
            {"histogram", {{"horizon", 1000}}}};
  ExperimentConfig cfg = config_from_json(j);
  const auto h = features_histogram(cfg);
  REQUIRE(h.size() == 1);
  REQUIRE(h[0].size() == 2);
  CHECK(h[0][0].state == 1);
  CHECK(h[0][0].exact == Approx(0.5).epsilon(1e-14));
  CHECK(h[0][0].empirical == 0.5);
  CHECK(h[0][1].empirical == 0.5);
  write_histogram_csv(h[0], dir / "h.csv");
  CHECK(slurp(dir / "h.csv").rfind("state,exact,empirical,abs_diff\n", 0) == 0);
  cfg.histogram_horizon = 0;
  CHECK_THROWS_AS(features_histogram(cfg), DomainError);
}

TEST_CASE("validate_suite") {
  json j = json::parse(R"({"env": {"queue": {"L": 20}}, "features": {"mode": "exact"}, "spd": {"R": 100}})");
  const ValidationReport good = validate_suite(config_from_json(j));
  for (const ValidationCheck& c : good.checks) CHECK_MESSAGE(c.passed, c.name << ": " << c.detail);
  const auto kappa = std::find_if(good.checks.begin(), good.checks.end(), [](const auto& c) { return c.name == "mdp.kappa"; });
  REQUIRE(kappa != good.checks.end());
  CHECK(kappa->value > 1.0);
  CHECK(good.to_json()["passed"] == true);

  // Corrupt one feature entry on disk.
  const fs::path dir = scratch("validate");
  ExperimentConfig cfg = config_from_json(j);
  const Environment env = load_environment(cfg);
  FeatureMatrix fm = load_features(cfg, env);
  fm.psi(7, 0) += 1e-3;
  write_features_csv(fm, dir / "psi.csv");
  j["features"] = {{"file", (dir / "psi.csv").string()}};
  const ValidationReport bad = validate_suite(config_from_json(j));
  CHECK_FALSE(bad.passed());
  const auto norm = std::find_if(bad.checks.begin(), bad.checks.end(), [](const auto& c) { return c.name == "features.normalization"; });
  REQUIRE(norm != bad.checks.end());
  CHECK_FALSE(norm->passed);
  CHECK(norm->value == Approx(1e-3).epsilon(1e-6));
  CHECK(norm->detail.find(format_double(norm->value)) != std::string::npos);

  j["features"] = {{"file", (dir / "missing.csv").string()}};
  const ValidationReport missing = validate_suite(config_from_json(j));
  CHECK_FALSE(missing.passed());
}
