#include "spdalp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spdalp/errors.hpp"

namespace spdalp {

namespace {

constexpr double kStochasticTol = 1e-12;

void require_distribution(const Eigen::Ref<const Vector>& row, const std::string& what) {
  if ((row.array() < 0.0).any() || !row.allFinite()) {
    throw DomainError(what + " has a negative or non-finite entry");
  }
  if (std::abs(row.sum() - 1.0) > kStochasticTol) {
    throw DomainError(what + " does not sum to 1");
  }
}

}  // namespace

Mdp::Mdp(std::vector<Matrix> transitions, Matrix costs, double gamma, Vector alpha)
    : transitions_(std::move(transitions)), costs_(std::move(costs)), gamma_(gamma), alpha_(std::move(alpha)) {
  const Eigen::Index n = alpha_.size();
  const Eigen::Index m = static_cast<Eigen::Index>(transitions_.size());
  if (n < 1 || m < 1) throw DimensionError("an MDP needs at least one state and one action");
  if (costs_.rows() != m || costs_.cols() != n) {
    throw DimensionError("cost table must be m×n (actions × states)");
  }
  if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw DomainError("discount must lie in (0, 1]");
  if (!costs_.allFinite()) throw DomainError("cost table has non-finite entries");
  for (Eigen::Index a = 0; a < m; ++a) {
    const Matrix& p = transitions_[static_cast<std::size_t>(a)];
    if (p.rows() != n || p.cols() != n) throw DimensionError("transition matrices must be n×n");
    for (Eigen::Index s = 0; s < n; ++s) {
      require_distribution(p.row(s).transpose(),
                           "transition row (a=" + std::to_string(a) + ", s=" + std::to_string(s) + ")");
    }
  }
  require_distribution(alpha_, "initial distribution");
}

Vector Mdp::flat_costs() const {
  const Eigen::Index n = states(), m = actions();
  Vector c(n * m);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index a = 0; a < m; ++a) c(flat_index(s, a, m)) = costs_(a, s);
  }
  return c;
}

Matrix Mdp::stacked_transitions() const {
  const Eigen::Index n = states(), m = actions();
  Matrix p(n * m, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index a = 0; a < m; ++a) p.row(flat_index(s, a, m)) = transition(a).row(s);
  }
  return p;
}

RandomizedPolicy::RandomizedPolicy(Matrix table) : table_(std::move(table)) {
  if (table_.rows() < 1 || table_.cols() < 1) throw DimensionError("policy table is empty");
  for (Eigen::Index s = 0; s < table_.rows(); ++s) {
    require_distribution(table_.row(s).transpose(), "policy row " + std::to_string(s));
  }
}

RandomizedPolicy RandomizedPolicy::uniform(Eigen::Index n, Eigen::Index m) {
  return RandomizedPolicy(Matrix::Constant(n, m, 1.0 / static_cast<double>(m)));
}

RandomizedPolicy RandomizedPolicy::deterministic(std::span<const int> actions, Eigen::Index m) {
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(actions.size()), m);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= m) throw DimensionError("action index out of range");
    t(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
  }
  return RandomizedPolicy(std::move(t));
}

Matrix policy_transition(const Mdp& mdp, const RandomizedPolicy& pi) {
  if (pi.states() != mdp.states() || pi.actions() != mdp.actions()) {
    throw DimensionError("policy shape does not match the MDP");
  }
  const Eigen::Index n = mdp.states();
  Matrix kernel = Matrix::Zero(n, n);
  for (Eigen::Index a = 0; a < mdp.actions(); ++a) {
    kernel += pi.table().col(a).asDiagonal() * mdp.transition(a);
  }
  return kernel;
}

StateDistribution state_occupancy(const Mdp& mdp, const RandomizedPolicy& pi) {
  const Matrix kernel = policy_transition(mdp, pi);
  const Eigen::Index n = mdp.states();
  const Matrix identity = Matrix::Identity(n, n);
  Vector mu;
  if (mdp.discounted()) {
    // μ(I − γP) = (1−γ)α, solved as the transposed system.
    const Matrix lhs = (identity - mdp.gamma() * kernel).transpose();
    mu = lhs.partialPivLu().solve((1.0 - mdp.gamma()) * mdp.alpha());
  } else {
    Eigen::FullPivLU<Matrix> rank_check(identity - kernel);
    rank_check.setThreshold(1e-11);
    if (rank_check.rank() < n - 1) {
      throw ErgodicityError("average-cost chain has " + std::to_string(n - rank_check.rank()) +
                            " recurrent classes; the stationary distribution is not unique");
    }
    // μ(I − P + 11ᵀ) = 1ᵀ has a unique solution iff there is one recurrent class.
    const Matrix lhs = (identity - kernel + Matrix::Ones(n, n)).transpose();
    mu = lhs.partialPivLu().solve(Vector::Ones(n));
  }
  if (!mu.allFinite()) throw NumericError("state occupancy solve produced non-finite values");
  // Roundoff can leave entries of transient states at about -1e-17.
  mu = mu.cwiseMax(0.0);
  mu /= mu.sum();
  return {std::move(mu)};
}

OccupancyVector occupation_measure(const Mdp& mdp, const RandomizedPolicy& pi) {
  const StateDistribution d = state_occupancy(mdp, pi);
  const Eigen::Index n = mdp.states(), m = mdp.actions();
  Vector xi(n * m);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index a = 0; a < m; ++a) xi(flat_index(s, a, m)) = pi(s, a) * d.mu(s);
  }
  return {std::move(xi)};
}

double policy_cost(const Mdp& mdp, const OccupancyVector& xi) {
  if (xi.xi.size() != mdp.pairs()) throw DimensionError("occupancy length does not match the MDP");
  return mdp.flat_costs().dot(xi.xi);
}

namespace {

// Q-values c_a(s) + γ (P_a v)(s), as an n×m table.
Matrix q_values(const Mdp& mdp, const Vector& v) {
  Matrix q(mdp.states(), mdp.actions());
  for (Eigen::Index a = 0; a < mdp.actions(); ++a) {
    q.col(a) = mdp.costs().row(a).transpose() + mdp.gamma() * (mdp.transition(a) * v);
  }
  return q;
}

}  // namespace

Vector bellman_backup(const Mdp& mdp, const Vector& v) {
  if (!mdp.discounted()) throw UnsupportedError("Bellman backup requires gamma < 1");
  if (v.size() != mdp.states()) throw DimensionError("value vector length does not match the MDP");
  return q_values(mdp, v).rowwise().minCoeff();
}

ValueIterationResult value_iteration(const Mdp& mdp, double tol) {
  if (!mdp.discounted()) throw UnsupportedError("value iteration requires gamma < 1");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");

  const double span = mdp.costs().cwiseAbs().maxCoeff();
  constexpr int kMargin = 100;
  int cap = kMargin;
  if (span > 0.0) {
    const double ratio = tol * (1.0 - mdp.gamma()) / span;
    if (ratio < 1.0) cap += static_cast<int>(std::ceil(std::log(ratio) / std::log(mdp.gamma())));
  }

  Vector v = Vector::Zero(mdp.states());
  int it = 0;
  for (;; ++it) {
    if (it > cap) throw IterationLimitError("value iteration did not converge within " + std::to_string(cap) + " sweeps");
    Vector next = bellman_backup(mdp, v);
    const double residual = (next - v).lpNorm<Eigen::Infinity>();
    v = std::move(next);
    if (residual <= tol) break;
  }

  const Matrix q = q_values(mdp, v);
  std::vector<int> greedy(static_cast<std::size_t>(mdp.states()));
  for (Eigen::Index s = 0; s < mdp.states(); ++s) {
    Eigen::Index best = 0;
    // minCoeff returns the first minimizer, i.e. the lowest action index.
    q.row(s).minCoeff(&best);
    greedy[static_cast<std::size_t>(s)] = static_cast<int>(best);
  }
  return {std::move(v), RandomizedPolicy::deterministic(greedy, mdp.actions()), it + 1};
}

RandomizedPolicy policy_from_occupancy(const OccupancyVector& xi, Eigen::Index actions) {
  if (actions < 1 || xi.xi.size() == 0 || xi.xi.size() % actions != 0) {
    throw DimensionError("occupancy length is not a multiple of the action count");
  }
  if ((xi.xi.array() < -1e-12).any()) {
    throw DomainError("occupancy has negative entries; use extract_policy for infeasible points");
  }
  const Eigen::Index n = xi.xi.size() / actions;
  Matrix table(n, actions);
  for (Eigen::Index s = 0; s < n; ++s) {
    const Vector row = xi.xi.segment(s * actions, actions).cwiseMax(0.0);
    const double marginal = row.sum();
    if (marginal > 0.0) {
      table.row(s) = row.transpose() / marginal;
    } else {
      table.row(s).setConstant(1.0 / static_cast<double>(actions));
    }
  }
  return RandomizedPolicy(std::move(table));
}

KappaDiagnostic ergodicity_kappa(const Mdp& mdp, std::span<const RandomizedPolicy> policies) {
  KappaDiagnostic out;
  const double n = static_cast<double>(mdp.states());
  for (const RandomizedPolicy& pi : policies) {
    const StateDistribution d = state_occupancy(mdp, pi);
    for (Eigen::Index s = 0; s < d.mu.size(); ++s) {
      const double scaled = n * d.mu(s);
      if (scaled <= 0.0) {
        out.transient_state = true;
        out.kappa = std::numeric_limits<double>::infinity();
        return out;
      }
      out.kappa = std::max({out.kappa, scaled * scaled, 1.0 / (scaled * scaled)});
    }
  }
  return out;
}

}  // namespace spdalp
