#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spdalp/mdp.hpp"
#include "spdalp/sampling.hpp"

namespace spdalp {

/**
 * The nm×d feature matrix Ψ. Column i is the occupation measure of base
 * policy i (state-major rows), so Ψθ is a candidate occupancy for every θ
 * with θᵀ1 = 1.
 *
 * `base` may be empty when Ψ was loaded from a file.
 */
struct FeatureMatrix {
  Matrix psi;
  Eigen::Index actions = 0;
  std::vector<RandomizedPolicy> base;

  Eigen::Index dims() const { return psi.cols(); }
  Eigen::Index pairs() const { return psi.rows(); }
  Eigen::Index states() const { return actions > 0 ? psi.rows() / actions : 0; }
};

/// Binary nm×n matrix; column s has ones exactly on the rows of state s.
struct AggregationMatrix {
  Matrix q;
};

AggregationMatrix build_q(Eigen::Index n, Eigen::Index m);

FeatureMatrix build_features_exact(const Mdp& mdp, std::span<const RandomizedPolicy> base);

/// One trajectory of `horizon` steps per base policy, started from s0 ~ α,
/// counting every visited (s, a) from the first step on.
FeatureMatrix build_features_empirical(const TransitionSampler& env, std::span<const RandomizedPolicy> base,
                                       std::int64_t horizon, std::uint64_t seed);

struct FeatureTolerance {
  double normalization = 1e-10;
  double stationarity = 1e-8;

  static FeatureTolerance exact() { return {}; }
  static FeatureTolerance empirical() { return {1e-10, 0.05}; }
};

struct FeatureValidation {
  double normalization_residual = 0.0;  // ‖Ψᵀ1 − 1‖_∞
  double stationarity_residual = 0.0;   // max |entry| of the flow residual
  FeatureTolerance tolerance;

  bool normalization_ok() const { return normalization_residual <= tolerance.normalization; }
  bool stationarity_ok() const { return stationarity_residual <= tolerance.stationarity; }
  bool ok() const { return normalization_ok() && stationarity_ok(); }
};

/// Flow residual matrix (d×n) whose rows vanish for exact features:
/// Ψᵀ(P − Q) when γ = 1 and Ψᵀ(γP − Q) + (1−γ)·1αᵀ when γ < 1.
Matrix stationarity_residual(const FeatureMatrix& fm, const Mdp& mdp);

FeatureValidation validate_features(const FeatureMatrix& fm, const Mdp& mdp,
                                    FeatureTolerance tolerance = FeatureTolerance::exact());

/// π^ω = Σ_i ω_i π^i. ω must be a probability vector (within 1e-10).
RandomizedPolicy mixture_policy(std::span<const RandomizedPolicy> base, const Vector& omega);

/// CSV with header psi_1,…,psi_d and one row per (s, a) in state-major order.
void write_features_csv(const FeatureMatrix& fm, const std::filesystem::path& path);
FeatureMatrix read_features_csv(const std::filesystem::path& path, Eigen::Index actions);

}  // namespace spdalp
