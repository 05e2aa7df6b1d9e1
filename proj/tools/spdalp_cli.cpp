// Command-line harness: run experiments, grid oracle, feature histograms,
// validation checks and manifest verification.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spdalp/errors.hpp"
#include "spdalp/experiment.hpp"
#include "spdalp/format.hpp"

namespace fs = std::filesystem;
using namespace spdalp;

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", flags.config, "experiment config (JSON)");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", flags.out, "output directory (overrides the config)");
  cmd->add_option("--jobs", flags.jobs, "concurrent trials")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", flags.seed, "base seed (overrides the config)");
}

ExperimentConfig load(const CommonFlags& flags) {
  ExperimentConfig cfg = read_config(flags.config);
  if (flags.jobs) cfg.jobs = *flags.jobs;
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.source["seed"] = *flags.seed;
  }
  if (!flags.out.empty()) cfg.output = flags.out;
  return cfg;
}

int cmd_run(const CommonFlags& flags) {
  const ExperimentConfig cfg = load(flags);
  const ExperimentResult result = run_experiment(cfg, cfg.output);
  for (const SolverResult& sr : result.solvers) {
    std::cout << sr.name << ": policy cost " << format_double(sr.final_policy_cost.mean) << " ± "
              << format_double(sr.final_policy_cost.ci95) << " (sd " << format_double(sr.final_policy_cost.sd)
              << "), avg objective " << format_double(sr.final_avg_objective.mean) << ", avg violation "
              << format_double(sr.final_avg_violation.mean) << '\n';
    for (const TrialResult& tr : sr.trials) {
      if (tr.trace.error) std::cerr << "error: " << sr.name << " seed " << tr.seed << ": " << *tr.trace.error << '\n';
    }
  }
  if (result.oracle) {
    std::cout << "oracle: mixture cost " << format_double(result.oracle->cost) << ", best ALP objective "
              << format_double(result.oracle->alp_objective) << '\n';
  }
  std::cout << "wrote " << cfg.output.string() << '\n';
  return result.ok ? 0 : 1;
}

int cmd_oracle(const CommonFlags& flags, std::optional<int> resolution) {
  ExperimentConfig cfg = load(flags);
  if (resolution) cfg.oracle_resolution = *resolution;
  const Environment env = load_environment(cfg);
  const GridOracleResult r = oracle_grid_search(env.mdp, env.base, cfg.oracle_resolution);
  const nlohmann::json j = {{"omega", std::vector<double>(r.omega.data(), r.omega.data() + r.omega.size())},
                            {"cost", r.cost},
                            {"alp_at_omega", r.alp_at_omega},
                            {"alp_omega", std::vector<double>(r.alp_omega.data(), r.alp_omega.data() + r.alp_omega.size())},
                            {"alp_objective", r.alp_objective},
                            {"resolution", cfg.oracle_resolution},
                            {"grid_points", r.grid_points}};
  std::cout << j.dump(2) << '\n';
  if (!flags.out.empty()) {
    fs::create_directories(flags.out);
    std::ofstream(fs::path(flags.out) / "oracle.json") << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_features(const CommonFlags& flags, std::optional<std::int64_t> horizon) {
  ExperimentConfig cfg = load(flags);
  if (horizon) cfg.histogram_horizon = *horizon;
  const auto histograms = features_histogram(cfg);
  fs::create_directories(cfg.output);
  const Environment env = load_environment(cfg);
  write_features_csv(load_features(cfg, env), cfg.output / "features.csv");
  for (std::size_t i = 0; i < histograms.size(); ++i) {
    const fs::path path = cfg.output / ("histogram_pi" + std::to_string(i + 1) + ".csv");
    write_histogram_csv(histograms[i], path);
    double worst = 0.0;
    for (const HistogramRow& r : histograms[i]) worst = std::max(worst, r.abs_diff);
    std::cout << path.string() << ": max abs_diff " << format_double(worst) << '\n';
  }
  return 0;
}

int cmd_validate(const CommonFlags& flags) {
  const ExperimentConfig cfg = load(flags);
  const ValidationReport report = validate_suite(cfg);
  const std::string text = report.to_json().dump(2);
  std::cout << text << '\n';
  if (!flags.out.empty()) {
    fs::create_directories(flags.out);
    std::ofstream(fs::path(flags.out) / "validation.json") << text << '\n';
  }
  return report.passed() ? 0 : 1;
}

int cmd_verify(const std::string& dir) {
  const auto bad = verify_manifest(dir);
  for (const std::string& f : bad) std::cout << "mismatch: " << f << '\n';
  if (bad.empty()) std::cout << "manifest ok\n";
  return bad.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic primal-dual solver for reduced approximate linear programs"};
  app.require_subcommand(1);

  CommonFlags run_flags, oracle_flags, features_flags, validate_flags;
  std::optional<int> resolution;
  std::optional<std::int64_t> horizon;
  std::string verify_dir;

  auto* run = app.add_subcommand("run", "run every configured solver over all seeds");
  add_common(run, run_flags);
  auto* oracle = app.add_subcommand("oracle", "brute-force grid search over mixture weights");
  add_common(oracle, oracle_flags);
  oracle->add_option("--resolution", resolution, "grid resolution K")->check(CLI::Range(2, 100000));
  auto* features = app.add_subcommand("features", "exact and empirical state-visit histograms");
  add_common(features, features_flags);
  features->add_option("--horizon", horizon, "trajectory length");
  auto* validate = app.add_subcommand("validate", "feature, geometry, gradient and ergodicity checks");
  add_common(validate, validate_flags);
  auto* verify = app.add_subcommand("verify", "re-hash the files listed in a bundle manifest");
  verify->add_option("--out", verify_dir, "bundle directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_flags);
    if (*oracle) return cmd_oracle(oracle_flags, resolution);
    if (*features) return cmd_features(features_flags, horizon);
    if (*validate) return cmd_validate(validate_flags);
    if (*verify) return cmd_verify(verify_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
