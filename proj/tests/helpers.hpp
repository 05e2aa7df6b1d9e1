#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "spdalp/mdp.hpp"
#include "spdalp/sampling.hpp"

namespace spdalp::testing {

inline Vector random_simplex(Eigen::Index n, Rng& rng, double offset = 0.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = offset + uniform01(rng);
  return v / v.sum();
}

// Dense random kernels keep every policy ergodic, which the average-cost
// paths need.
inline Mdp random_mdp(Eigen::Index n, Eigen::Index m, double gamma, Rng& rng) {
  std::vector<Matrix> p;
  for (Eigen::Index a = 0; a < m; ++a) {
    Matrix pa(n, n);
    for (Eigen::Index s = 0; s < n; ++s) pa.row(s) = random_simplex(n, rng, 0.05).transpose();
    p.push_back(pa);
  }
  Matrix c(m, n);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index s = 0; s < n; ++s) c(a, s) = 10.0 * uniform01(rng);
  }
  return Mdp(std::move(p), c, gamma, random_simplex(n, rng, 0.1));
}

inline RandomizedPolicy random_policy(Eigen::Index n, Eigen::Index m, Rng& rng) {
  Matrix t(n, m);
  for (Eigen::Index s = 0; s < n; ++s) t.row(s) = random_simplex(m, rng).transpose();
  return RandomizedPolicy(t);
}

// Calls f on each of the m^n deterministic policies.
inline void for_each_deterministic(Eigen::Index n, Eigen::Index m, const std::function<void(const RandomizedPolicy&)>& f) {
  std::vector<int> choice(static_cast<std::size_t>(n), 0);
  while (true) {
    f(RandomizedPolicy::deterministic(choice, m));
    std::size_t k = 0;
    while (k < choice.size() && ++choice[k] == m) choice[k++] = 0;
    if (k == choice.size()) return;
  }
}

// Central differences.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector up = x, down = x;
    up(i) += h;
    down(i) -= h;
    g(i) = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

// Golden-section search for a unimodal function on [lo, hi].
inline double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters && b - a > 1e-15 * (1.0 + std::abs(a)); ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

inline Mdp two_state_swap(double gamma) {
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  Matrix c(1, 2);
  c << 1, 2;
  Vector alpha(2);
  alpha << 1, 0;
  return Mdp({swap}, c, gamma, alpha);
}

}  // namespace spdalp::testing
