#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spdalp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Position of the pair (s, a) in every state-action vector of the library.
/// Flattening is state-major: the m actions of state s are contiguous.
inline Eigen::Index flat_index(Eigen::Index s, Eigen::Index a, Eigen::Index m) { return s * m + a; }

/**
 * Finite MDP with n states and m actions.
 *
 * Transition matrices are stored per action (P_a is n×n, rows are
 * distributions over the next state) and costs as an m×n table indexed
 * (action, state). gamma lies in (0, 1]; gamma == 1 selects the
 * average-cost (stationary) criterion.
 */
class Mdp {
 public:
  Mdp(std::vector<Matrix> transitions, Matrix costs, double gamma, Vector alpha);

  Eigen::Index states() const { return alpha_.size(); }
  Eigen::Index actions() const { return static_cast<Eigen::Index>(transitions_.size()); }
  Eigen::Index pairs() const { return states() * actions(); }

  const Matrix& transition(Eigen::Index a) const { return transitions_[static_cast<std::size_t>(a)]; }
  const std::vector<Matrix>& transitions() const { return transitions_; }
  const Matrix& costs() const { return costs_; }
  double cost(Eigen::Index s, Eigen::Index a) const { return costs_(a, s); }
  double gamma() const { return gamma_; }
  const Vector& alpha() const { return alpha_; }
  bool discounted() const { return gamma_ < 1.0; }

  /// Cost vector of length nm in state-major order.
  Vector flat_costs() const;
  /// The nm×n matrix whose row (s,a) is P_a(s, ·).
  Matrix stacked_transitions() const;

 private:
  std::vector<Matrix> transitions_;
  Matrix costs_;
  double gamma_;
  Vector alpha_;
};

/// Row-stochastic n×m table; pi(s, a) is the probability of action a in state s.
class RandomizedPolicy {
 public:
  explicit RandomizedPolicy(Matrix table);

  static RandomizedPolicy uniform(Eigen::Index n, Eigen::Index m);
  static RandomizedPolicy deterministic(std::span<const int> actions, Eigen::Index m);

  Eigen::Index states() const { return table_.rows(); }
  Eigen::Index actions() const { return table_.cols(); }
  double operator()(Eigen::Index s, Eigen::Index a) const { return table_(s, a); }
  const Matrix& table() const { return table_; }

 private:
  Matrix table_;
};

struct StateDistribution {
  Vector mu;
};

/// State-action occupancy ξ, length nm, state-major.
struct OccupancyVector {
  Vector xi;
};

Matrix policy_transition(const Mdp& mdp, const RandomizedPolicy& pi);

/// Discounted state distribution (1−γ)α(I − γP^π)^{-1}, or the stationary
/// distribution of P^π when γ = 1. Throws ErgodicityError when the γ = 1
/// chain has more than one recurrent class.
StateDistribution state_occupancy(const Mdp& mdp, const RandomizedPolicy& pi);

/// ξ_a(s) = π_a(s) μ(s).
OccupancyVector occupation_measure(const Mdp& mdp, const RandomizedPolicy& pi);

double policy_cost(const Mdp& mdp, const OccupancyVector& xi);

/// (Sv)(s) = min_a { c_a(s) + γ Σ_s' P_a(s,s') v(s') }. Requires γ < 1.
Vector bellman_backup(const Mdp& mdp, const Vector& v);

struct ValueIterationResult {
  Vector value;
  RandomizedPolicy greedy;
  int iterations = 0;
};

/// Iterates the Bellman backup from v = 0 until ‖Sv − v‖_∞ ≤ tol. The greedy
/// policy breaks ties towards the lowest action index.
ValueIterationResult value_iteration(const Mdp& mdp, double tol);

/// π_a(s) = ξ_a(s) / Σ_a ξ_a(s); states with zero marginal get the uniform row.
RandomizedPolicy policy_from_occupancy(const OccupancyVector& xi, Eigen::Index actions);

struct KappaDiagnostic {
  double kappa = 1.0;
  bool transient_state = false;  // some μ(s) == 0; kappa is +inf
};

/// Smallest κ with 1/(n√κ) ≤ μ(s) ≤ √κ/n for every supplied policy and state.
KappaDiagnostic ergodicity_kappa(const Mdp& mdp, std::span<const RandomizedPolicy> policies);

}  // namespace spdalp
