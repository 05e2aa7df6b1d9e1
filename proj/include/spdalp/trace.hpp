#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spdalp/mdp.hpp"

namespace spdalp {

/// One strided checkpoint of a run. `objective` columns are NaN when the run
/// had no evaluation model.
struct TraceRecord {
  std::int64_t t = 0;             // iterations completed
  double objective = 0.0;         // cᵀΨθ_t
  double violation = 0.0;         // V(θ_t)
  double avg_objective = 0.0;     // cᵀΨθ̂_t
  double avg_violation = 0.0;     // V(θ̂_t)
  double lambda_norm = 0.0;       // ‖λ_t‖₂ (0 for the penalty method)
};

struct RunTrace {
  std::vector<TraceRecord> records;
  Vector theta_hat;
  Vector lambda_hat;
  std::optional<RandomizedPolicy> policy;
  std::int64_t boundary_clamps = 0;
  std::optional<std::string> error;  // set when the run aborted early

  bool ok() const { return !error.has_value(); }
};

/// Default checkpoint spacing: max(1, T / 1000).
std::int64_t default_stride(std::int64_t iterations);

/// True if iteration index t (0-based) closes a checkpoint.
inline bool is_checkpoint(std::int64_t t, std::int64_t stride, std::int64_t iterations) {
  return (t + 1) % stride == 0 || t + 1 == iterations;
}

inline constexpr const char* kTraceHeader = "t,objective,violation,avg_objective,avg_violation,lambda_norm";

void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);
std::vector<TraceRecord> read_trace_csv(const std::filesystem::path& path);

}  // namespace spdalp
