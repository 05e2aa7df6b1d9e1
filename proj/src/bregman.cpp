#include "spdalp/bregman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spdalp/errors.hpp"

namespace spdalp {

namespace {

// Iterates are kept within this fraction of the radius before ∇φ is taken.
constexpr double kGuard = 1.0 - 1e-9;
// Required margin of R over the radius at which the hyperplane only touches the domain.
constexpr double kFeasibleMargin = 1.0 + 1e-6;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double xlogx_ratio(double x, double y) { return x > 0.0 ? x * std::log(x / y) : 0.0; }

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double j_prime(const BregmanGeometry& geom, const Vector& y, double z) {
  return geom.grad_phi_star((y.array() + z).matrix()).sum() - 1.0;
}

// Safeguarded Newton on the increasing function J'(z), started from z0.
double refine_multiplier(const BregmanGeometry& geom, const Vector& y, double z0) {
  constexpr double kTight = 1e-13;
  constexpr double kAccept = 1e-10;
  constexpr int kMaxDoublings = 64;

  double g = j_prime(geom, y, z0);
  if (!std::isfinite(g)) throw NumericError("J'(z) is not finite");
  if (std::abs(g) <= kTight) return z0;

  double lo = z0, hi = z0;
  double step = 1.0;
  int doublings = 0;
  if (g > 0.0) {
    for (lo = z0 - step; j_prime(geom, y, lo) > 0.0; lo = z0 - step) {
      if (++doublings > kMaxDoublings) throw InfeasibleGeometryError("no sign change of J' below the start point");
      step *= 2.0;
    }
  } else {
    for (hi = z0 + step; j_prime(geom, y, hi) < 0.0; hi = z0 + step) {
      if (++doublings > kMaxDoublings) throw InfeasibleGeometryError("no sign change of J' above the start point");
      step *= 2.0;
    }
  }

  double z = z0;
  for (int it = 0; it < 500; ++it) {
    g = j_prime(geom, y, z);
    if (std::abs(g) <= kTight) return z;
    if (g > 0.0) {
      hi = z;
    } else {
      lo = z;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(z))) break;
    const double curvature = geom.ones_curvature_star((y.array() + z).matrix());
    double next = curvature > 0.0 ? z - g / curvature : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    z = next;
  }
  g = j_prime(geom, y, z);
  if (std::abs(g) > kAccept) throw NumericError("Bregman projection did not converge: |J'| = " + std::to_string(g));
  return z;
}

}  // namespace

BregmanGeometry::BregmanGeometry(double radius) : radius_(radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("geometry radius must be positive and finite");
}

bool BregmanGeometry::interior(const Vector& theta) const { return theta.allFinite() && norm(theta) < radius_; }

void BregmanGeometry::require_interior(const Vector& theta, const char* what) const {
  if (!interior(theta)) throw DomainError(std::string(what) + " is not in the open " + std::string(name()) + " domain");
}

std::optional<double> BregmanGeometry::explicit_multiplier(const Vector&) const { return std::nullopt; }

double BregmanGeometry::norm(const Vector& v) const {
  return norm_kind() == NormKind::euclidean ? v.norm() : v.lpNorm<Eigen::Infinity>();
}

double BregmanGeometry::dual_norm(const Vector& v) const {
  return norm_kind() == NormKind::euclidean ? v.norm() : v.lpNorm<1>();
}

// --- ball -------------------------------------------------------------------

BallModulus::BallModulus(double radius) : BregmanGeometry(radius) {}

namespace {
// √(R² − ‖θ‖²) without cancellation near the sphere.
double ball_gap(double radius, const Vector& theta) {
  const double r = theta.norm();
  return std::sqrt(std::max(0.0, (radius - r) * (radius + r)));
}
}  // namespace

double BallModulus::phi(const Vector& theta) const {
  if (theta.norm() > radius()) throw DomainError("point outside the closed ball");
  return -ball_gap(radius(), theta);
}

Vector BallModulus::grad_phi(const Vector& theta) const {
  require_interior(theta, "gradient point");
  return theta / ball_gap(radius(), theta);
}

double BallModulus::phi_star(const Vector& y) const { return radius() * std::sqrt(1.0 + y.squaredNorm()); }

Vector BallModulus::grad_phi_star(const Vector& y) const { return radius() * y / std::sqrt(1.0 + y.squaredNorm()); }

double BallModulus::ones_curvature_star(const Vector& y) const {
  const double s2 = 1.0 + y.squaredNorm();
  const double s = std::sqrt(s2);
  const double sum = y.sum();
  return radius() * (static_cast<double>(y.size()) / s - sum * sum / (s2 * s));
}

double BallModulus::divergence(const Vector& a, const Vector& b) const {
  require_interior(b, "divergence base point");
  if (a.norm() > radius()) throw DomainError("divergence argument outside the closed ball");
  // (R² − aᵀb)/g_b − g_a rewritten as a sum of squares: exactly 0 at a = b
  // and never negative.
  const double ga = ball_gap(radius(), a), gb = ball_gap(radius(), b);
  return ((a - b).squaredNorm() + (ga - gb) * (ga - gb)) / (2.0 * gb);
}

bool BallModulus::clamp_to_domain(Vector& theta) const {
  const double limit = kGuard * radius();
  const double r = theta.norm();
  if (r <= limit) return false;
  theta *= limit / r;
  return true;
}

bool BallModulus::hyperplane_feasible(Eigen::Index d) const {
  return d >= 1 && radius() * std::sqrt(static_cast<double>(d)) >= kFeasibleMargin;
}

std::optional<double> BallModulus::explicit_multiplier(const Vector& y) const { return solve_z_ball(radius(), y); }

// --- box --------------------------------------------------------------------

BoxModulus::BoxModulus(double radius) : BregmanGeometry(radius) {}

double BoxModulus::phi(const Vector& theta) const {
  const double r = radius();
  if (theta.lpNorm<Eigen::Infinity>() > r) throw DomainError("point outside the closed cube");
  double total = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) total += xlogx(r + theta(i)) + xlogx(r - theta(i));
  return total;
}

Vector BoxModulus::grad_phi(const Vector& theta) const {
  require_interior(theta, "gradient point");
  // log((R + θ)/(R − θ)) = 2 artanh(θ/R)
  return (2.0 * (theta.array() / radius()).atanh()).matrix();
}

double BoxModulus::phi_star(const Vector& y) const {
  const double r = radius();
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    total += -r * y(i) - 2.0 * r * (std::log(2.0 * r) - softplus(y(i)));
  }
  return total;
}

Vector BoxModulus::grad_phi_star(const Vector& y) const { return (radius() * (0.5 * y.array()).tanh()).matrix(); }

double BoxModulus::ones_curvature_star(const Vector& y) const {
  const auto t = (0.5 * y.array()).tanh();
  return 0.5 * radius() * (1.0 - t.square()).sum();
}

double BoxModulus::divergence(const Vector& a, const Vector& b) const {
  require_interior(b, "divergence base point");
  const double r = radius();
  if (a.lpNorm<Eigen::Infinity>() > r) throw DomainError("divergence argument outside the closed cube");
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    total += xlogx_ratio(r + a(i), r + b(i)) + xlogx_ratio(r - a(i), r - b(i));
  }
  // Each coordinate pair is ≥ 0 in exact arithmetic; the sum can round to about -1e-16.
  return std::max(total, 0.0);
}

bool BoxModulus::clamp_to_domain(Vector& theta) const {
  const double limit = kGuard * radius();
  bool moved = false;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (std::abs(theta(i)) > limit) {
      theta(i) = std::copysign(limit, theta(i));
      moved = true;
    }
  }
  return moved;
}

bool BoxModulus::hyperplane_feasible(Eigen::Index d) const {
  return d >= 1 && radius() * static_cast<double>(d) >= kFeasibleMargin;
}

std::unique_ptr<BregmanGeometry> make_geometry(std::string_view name, double radius) {
  if (name == "ball") return std::make_unique<BallModulus>(radius);
  if (name == "box") return std::make_unique<BoxModulus>(radius);
  throw DomainError("unknown geometry '" + std::string(name) + "' (expected ball or box)");
}

double solve_z_ball(double radius, const Vector& v) {
  const auto d = static_cast<double>(v.size());
  if (v.size() < 1) throw DimensionError("empty vector");
  if (radius * std::sqrt(d) < kFeasibleMargin) {
    throw InfeasibleGeometryError("ball radius must exceed 1/sqrt(d) for the hyperplane to cross its interior");
  }
  if (!v.allFinite()) throw NumericError("non-finite conjugate point");
  const double r2 = radius * radius;
  const double s = v.sum();
  // a z² + 2 b z + c = 0
  const double a = r2 * d * d - d;
  const double b = s * (r2 * d - 1.0);
  const double c = r2 * s * s - v.squaredNorm() - 1.0;
  double disc = b * b - a * c;
  if (disc < 0.0) {
    const double scale = std::max({1.0, b * b, std::abs(a * c)});
    if (disc < -1e-12 * scale) throw NumericError("negative discriminant in the ball projection");
    disc = 0.0;
  }
  const double root = std::sqrt(disc);
  // Larger root, in whichever form avoids cancellation.
  return b > 0.0 ? -c / (b + root) : (root - b) / a;
}

double minimize_J(const BregmanGeometry& geom, const Vector& y) {
  if (!geom.hyperplane_feasible(y.size())) {
    throw InfeasibleGeometryError("the hyperplane does not meet the interior of the domain");
  }
  return refine_multiplier(geom, y, 0.0);
}

HyperplaneProjection hyperplane_project(const BregmanGeometry& geom, const Vector& theta_tilde) {
  if (theta_tilde.size() < 1) throw DimensionError("empty point");
  if (!geom.hyperplane_feasible(theta_tilde.size())) {
    throw InfeasibleGeometryError("the hyperplane does not meet the interior of the " + std::string(geom.name()) +
                                  " domain");
  }
  return hyperplane_project_conjugate(geom, geom.grad_phi(theta_tilde));
}

HyperplaneProjection hyperplane_project_conjugate(const BregmanGeometry& geom, const Vector& y) {
  if (y.size() < 1) throw DimensionError("empty point");
  if (!geom.hyperplane_feasible(y.size())) {
    throw InfeasibleGeometryError("the hyperplane does not meet the interior of the " + std::string(geom.name()) +
                                  " domain");
  }
  if (!y.allFinite()) throw NumericError("non-finite conjugate point");
  const double start = geom.explicit_multiplier(y).value_or(0.0);
  const double z = refine_multiplier(geom, y, start);
  return {geom.grad_phi_star((y.array() + z).matrix()), z};
}

}  // namespace spdalp
