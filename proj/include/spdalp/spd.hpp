#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "spdalp/bregman.hpp"
#include "spdalp/features.hpp"
#include "spdalp/sampling.hpp"
#include "spdalp/trace.hpp"

namespace spdalp {

// ---------------------------------------------------------------------------
// Sampling oracle

struct OracleSample {
  Eigen::Index policy = 0;
  Eigen::Index state = 0;
  Eigen::Index action = 0;
  double cost = 0.0;
};

/// Draws i ~ Uniform[d], then (s, a) ~ ψ^i, and reports c_a(s).
class SamplingOracle {
 public:
  virtual ~SamplingOracle() = default;
  virtual OracleSample draw(Rng& rng) const = 0;
};

/// Oracle over the columns of a feature matrix and the cost table of an MDP.
class FeatureSamplingOracle final : public SamplingOracle {
 public:
  FeatureSamplingOracle(const Mdp& mdp, const FeatureMatrix& fm);
  OracleSample draw(Rng& rng) const override;

 private:
  Eigen::Index actions_;
  Vector costs_;  // flat, state-major
  std::vector<Categorical> columns_;
};

// ---------------------------------------------------------------------------
// Configuration

enum class StepSchedule { inv_sqrt, constant };

/// η_t = 1/√(t+1) or a constant.
struct LearningRate {
  StepSchedule schedule = StepSchedule::inv_sqrt;
  double value = 0.0;

  double at(std::int64_t t) const;
  static LearningRate inv_sqrt() { return {}; }
  static LearningRate constant(double eta) { return {StepSchedule::constant, eta}; }
};

/// β, either fixed or T^{1/4}.
struct DualRadius {
  bool t_quarter = true;
  double value = 0.0;

  double beta(std::int64_t iterations) const;
  static DualRadius quarter_power() { return {}; }
  static DualRadius fixed(double beta) { return {false, beta}; }
};

/// G_β = max{1/(1−γ), β}; G_β = β when γ = 1.
double dual_bound(double gamma, double beta);

enum class DualMode {
  rescale_only,       // λ⁺ = G·u / max{G, ‖u‖₂}
  clip_then_rescale,  // same, applied to [u]_+
};

enum class DualSign {
  lagrangian,  // ascend along ∇_λ L = −Ψθ (multipliers grow where Ψθ < 0)
  as_written,  // ascend along +Ψθ
};

struct SpdConfig {
  std::int64_t iterations = 1000;
  LearningRate eta = LearningRate::inv_sqrt();
  DualRadius beta = DualRadius::quarter_power();
  std::string geometry = "ball";
  double radius = 100.0;
  double gamma = 1.0;  // discount of the problem, used only for G_β
  std::optional<Vector> theta0;  // default: uniform mixture
  DualMode dual_mode = DualMode::clip_then_rescale;
  DualSign dual_sign = DualSign::lagrangian;
  std::uint64_t seed = 0;
  std::int64_t stride = 0;  // 0 selects default_stride(iterations)
  bool check_invariants = false;
};

std::string_view to_string(DualMode mode);
std::string_view to_string(DualSign sign);
DualMode parse_dual_mode(std::string_view text);
DualSign parse_dual_sign(std::string_view text);

// ---------------------------------------------------------------------------
// Solver state and steps

struct SolverState {
  Vector theta;
  Vector lambda;
  std::int64_t t = 0;
  Vector theta_sum;   // Σ η_t θ_t
  Vector lambda_sum;  // Σ η_t λ_t
  double eta_sum = 0.0;

  Vector theta_average() const { return eta_sum > 0.0 ? Vector(theta_sum / eta_sum) : theta; }
  Vector lambda_average() const { return eta_sum > 0.0 ? Vector(lambda_sum / eta_sum) : lambda; }
};

/// (c_a(s) − λ_a(s)) Ψ_a(s) / ((1/d) Σ_i ψ^i_a(s)), the importance-weighted
/// estimate of ∇_θ L = Ψᵀ(c − λ).
Vector stochastic_primal_gradient(const Vector& lambda, const OracleSample& sample, const FeatureMatrix& fm);

/// Ψθ.
Vector dual_gradient(const Vector& theta, const FeatureMatrix& fm);

struct PrimalStep {
  Vector theta;
  bool clamped = false;  // a point had to be pulled back inside the domain
};

/// θ̃ = ∇φ*(∇φ(θ) − η g), then the Bregman projection of θ̃ onto θᵀ1 = 1.
PrimalStep primal_step(const Vector& theta, const Vector& grad, double eta, const BregmanGeometry& geom);

/// u = λ + η·direction, optionally clipped to u ≥ 0, then rescaled into the
/// Euclidean ball of radius G_β.
Vector dual_step(const Vector& lambda, const Vector& direction, double eta, double g_beta, DualMode mode);

/// V(θ) = ½ ‖[Ψθ]_−‖₂.
double violation(const Vector& theta, const FeatureMatrix& fm);

/// π_a(s) ∝ [(Ψθ)_a(s)]_+, uniform where every entry of a state is ≤ 0.
RandomizedPolicy extract_policy(const Vector& theta, const FeatureMatrix& fm);

/// max over (s, a) of ‖Ψ_a(s) / ((1/d)Σ_i ψ^i_a(s))‖_* for the geometry's dual norm.
double importance_weight_bound(const FeatureMatrix& fm, const BregmanGeometry& geom);

/// Runs the projection-free stochastic primal-dual method for
/// `cfg.iterations` rounds. `evaluator`, when given, is used only to fill the
/// objective columns of the trace. Numeric failures stop the run and are
/// reported in RunTrace::error together with the records collected so far.
RunTrace run_spd(const SpdConfig& cfg, const FeatureMatrix& fm, const SamplingOracle& oracle,
                 const Mdp* evaluator = nullptr);

}  // namespace spdalp
