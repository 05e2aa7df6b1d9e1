#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "spdalp/features.hpp"
#include "spdalp/spd.hpp"
#include "spdalp/trace.hpp"

namespace spdalp {

enum class PenaltyGradient {
  full,     // exact subgradient of f_ω
  sampled,  // cost term estimated from one oracle sample, penalty terms exact
};

std::string_view to_string(PenaltyGradient mode);
PenaltyGradient parse_penalty_gradient(std::string_view text);

struct PenaltyConfig {
  std::int64_t iterations = 1000;
  std::optional<double> eta;  // default 1/T
  double omega = 1.0;
  double radius = 100.0;
  std::optional<Vector> theta0;  // default: uniform mixture
  std::uint64_t seed = 0;
  PenaltyGradient gradient = PenaltyGradient::full;
  std::int64_t stride = 0;

  double step_size() const { return eta.value_or(1.0 / static_cast<double>(iterations)); }
};

/// f_ω(θ) = cᵀΨθ + ω‖[Ψθ]_−‖₁ + ω‖θᵀ S‖₁, with S the flow residual matrix
/// of stationarity_residual().
double penalty_objective(const Vector& theta, const FeatureMatrix& fm, const Mdp& mdp, double omega);

/// A subgradient of f_ω; kinks of either ℓ1 term contribute 0.
Vector penalty_subgradient(const Vector& theta, const FeatureMatrix& fm, const Mdp& mdp, double omega);

/// Euclidean projection onto {‖θ‖₂ ≤ R} ∩ {θᵀ1 = 1}.
Vector project_ball_hyperplane(const Vector& theta, double radius);

/// Projected subgradient descent on f_ω over the ball ∩ hyperplane, with the
/// uniform average θ̂_T = (1/T) Σ_{t<T} θ_t. The trace uses the SPD schema
/// with lambda_norm fixed to 0.
RunTrace run_penalty(const PenaltyConfig& cfg, const FeatureMatrix& fm, const Mdp& mdp);

}  // namespace spdalp
