#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spdalp/features.hpp"
#include "spdalp/mdp.hpp"
#include "spdalp/penalty.hpp"
#include "spdalp/queue.hpp"
#include "spdalp/spd.hpp"
#include "spdalp/trace.hpp"

namespace spdalp {

enum class FeatureMode { exact, empirical, file };

struct FeatureSource {
  FeatureMode mode = FeatureMode::exact;
  std::int64_t horizon = 1'000'000;  // empirical mode
  std::uint64_t seed = 0;
  std::filesystem::path file;  // file mode
};

struct ExperimentConfig {
  // Environment: either the queue benchmark or an MDP file with base policies.
  std::optional<QueueSpec> queue;
  std::filesystem::path mdp_file;
  std::vector<RandomizedPolicy> base_policies;

  FeatureSource features;
  std::optional<SpdConfig> spd;
  std::optional<PenaltyConfig> penalty;
  std::vector<double> penalty_omegas;  // one penalty solver per entry

  int trials = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  int oracle_resolution = 200;
  std::int64_t histogram_horizon = 1'000'000;
  std::filesystem::path output = "out";

  nlohmann::json source;  // the parsed document, echoed into the manifest
};

/// Parses a JSON experiment document. Relative paths are resolved against
/// `base_dir`.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig read_config(const std::filesystem::path& path);

struct Environment {
  Mdp mdp;
  std::vector<RandomizedPolicy> base;
};

Environment load_environment(const ExperimentConfig& cfg);
FeatureMatrix load_features(const ExperimentConfig& cfg, const Environment& env);

// ---------------------------------------------------------------------------

struct GridOracleResult {
  Vector omega;              // best mixture weights (true mixture-policy cost)
  double cost = 0.0;         // cᵀ ξ^{π^ω}
  double alp_at_omega = 0.0; // cᵀΨω at the same grid point
  Vector alp_omega;          // grid point minimizing cᵀΨω
  double alp_objective = 0.0;
  std::int64_t grid_points = 0;
};

/// Exhaustive search over the simplex grid with spacing 1/K (d ≤ 3). Ties
/// keep the first point in enumeration order, which puts the most weight on
/// the lowest-index policy.
GridOracleResult oracle_grid_search(const Mdp& mdp, std::span<const RandomizedPolicy> base, int resolution);

// ---------------------------------------------------------------------------

struct StatSummary {
  double mean = 0.0;
  double sd = 0.0;    // sample standard deviation (0 for one trial)
  double ci95 = 0.0;  // 1.96 · sd / √trials
};

StatSummary summarize(std::span<const double> values);

struct SummaryRow {
  std::int64_t t = 0;
  StatSummary objective, violation, avg_objective, avg_violation;
};

/// Checkpoint-wise statistics across trials; every trial must share the same
/// checkpoints.
std::vector<SummaryRow> aggregate_traces(std::span<const std::vector<TraceRecord>> trials);
void write_summary_csv(std::span<const SummaryRow> rows, const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct TrialResult {
  std::uint64_t seed = 0;
  RunTrace trace;
  double policy_cost = 0.0;  // cᵀξ of the extracted policy
};

struct SolverResult {
  std::string name;  // "spd", "penalty_w10", ...
  std::vector<TrialResult> trials;
  StatSummary final_policy_cost;
  StatSummary final_avg_objective;
  StatSummary final_avg_violation;
};

struct ExperimentResult {
  std::vector<SolverResult> solvers;
  std::optional<GridOracleResult> oracle;
  bool ok = true;
};

/// Runs every configured solver for every trial (seed + k), writes the bundle
/// into `out_dir`, and returns the in-memory results.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Same as run_experiment but without touching the filesystem.
ExperimentResult run_trials(const ExperimentConfig& cfg, const Environment& env, const FeatureMatrix& fm);

// ---------------------------------------------------------------------------

struct HistogramRow {
  int state = 0;  // 1-based
  double exact = 0.0;
  double empirical = 0.0;
  double abs_diff = 0.0;
};

/// Exact and single-trajectory state-visit frequencies for each base policy.
std::vector<std::vector<HistogramRow>> features_histogram(const ExperimentConfig& cfg);
void write_histogram_csv(std::span<const HistogramRow> rows, const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool passed() const;
  nlohmann::json to_json() const;
};

ValidationReport validate_suite(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------

/// SHA-1 of "blob <size>\0<content>", i.e. the id git gives the file.
std::string git_blob_hash(std::string_view content);
std::string git_blob_hash_file(const std::filesystem::path& path);

/// Files whose current hash differs from the one listed in manifest.json.
std::vector<std::string> verify_manifest(const std::filesystem::path& out_dir);

}  // namespace spdalp
