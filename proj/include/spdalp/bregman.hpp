#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "spdalp/mdp.hpp"

namespace spdalp {

enum class NormKind { euclidean, max };

/**
 * Legendre modulus φ whose domain is the norm ball Θ_R of the policy class.
 *
 * The gradient maps ∇φ and ∇φ* are mutually inverse bijections between the
 * open domain and the whole conjugate space, so a mirror step followed by a
 * Bregman projection onto {θ : θᵀ1 = 1} never leaves Θ_R and never needs a
 * Euclidean projection onto it.
 */
class BregmanGeometry {
 public:
  explicit BregmanGeometry(double radius);
  virtual ~BregmanGeometry() = default;

  double radius() const { return radius_; }
  virtual std::string_view name() const = 0;
  virtual NormKind norm_kind() const = 0;

  virtual double phi(const Vector& theta) const = 0;
  virtual Vector grad_phi(const Vector& theta) const = 0;
  virtual double phi_star(const Vector& y) const = 0;
  virtual Vector grad_phi_star(const Vector& y) const = 0;
  /// 1ᵀ ∇²φ*(y) 1, the second derivative of J.
  virtual double ones_curvature_star(const Vector& y) const = 0;

  /// D_φ(a; b). `a` may lie on the boundary, `b` must be interior.
  virtual double divergence(const Vector& a, const Vector& b) const = 0;

  /// σ such that D_φ(a; b) ≥ σ/2 ‖a − b‖² in this geometry's norm.
  virtual double strong_convexity() const = 0;

  bool interior(const Vector& theta) const;
  /// Pulls θ into the guarded domain (1 − 1e-9)·Θ_R. Returns true if θ moved.
  virtual bool clamp_to_domain(Vector& theta) const = 0;

  /// Whether {θ : θᵀ1 = 1} meets the interior with enough margin to project.
  virtual bool hyperplane_feasible(Eigen::Index d) const = 0;

  /// Closed-form minimizer of J(z) = φ*(z1 + y) − z when one exists.
  virtual std::optional<double> explicit_multiplier(const Vector& y) const;

  double norm(const Vector& v) const;
  double dual_norm(const Vector& v) const;

 protected:
  void require_interior(const Vector& theta, const char* what) const;

 private:
  double radius_;
};

/// φ(θ) = −√(R² − ‖θ‖²) on the open Euclidean ball.
class BallModulus final : public BregmanGeometry {
 public:
  explicit BallModulus(double radius);

  std::string_view name() const override { return "ball"; }
  NormKind norm_kind() const override { return NormKind::euclidean; }
  double phi(const Vector& theta) const override;
  Vector grad_phi(const Vector& theta) const override;
  double phi_star(const Vector& y) const override;
  Vector grad_phi_star(const Vector& y) const override;
  double ones_curvature_star(const Vector& y) const override;
  double divergence(const Vector& a, const Vector& b) const override;
  double strong_convexity() const override { return 1.0 / radius(); }
  bool clamp_to_domain(Vector& theta) const override;
  bool hyperplane_feasible(Eigen::Index d) const override;
  std::optional<double> explicit_multiplier(const Vector& y) const override;
};

/// φ(θ) = Σ_i (R + θ_i) log(R + θ_i) + (R − θ_i) log(R − θ_i) on the open cube.
class BoxModulus final : public BregmanGeometry {
 public:
  explicit BoxModulus(double radius);

  std::string_view name() const override { return "box"; }
  NormKind norm_kind() const override { return NormKind::max; }
  double phi(const Vector& theta) const override;
  Vector grad_phi(const Vector& theta) const override;
  double phi_star(const Vector& y) const override;
  Vector grad_phi_star(const Vector& y) const override;
  double ones_curvature_star(const Vector& y) const override;
  double divergence(const Vector& a, const Vector& b) const override;
  double strong_convexity() const override { return 2.0 / radius(); }
  bool clamp_to_domain(Vector& theta) const override;
  bool hyperplane_feasible(Eigen::Index d) const override;
};

/// "ball" or "box".
std::unique_ptr<BregmanGeometry> make_geometry(std::string_view name, double radius);

/// Multiplier z* of the projection for the ball modulus, from the roots of
/// the quadratic R²(zd + 1ᵀV)² = 1 + ‖z1 + V‖² (the larger root is the one
/// with zd + 1ᵀV > 0). V is ∇φ(θ̃) = θ̃ / √(R² − ‖θ̃‖²).
double solve_z_ball(double radius, const Vector& v);

/// Unique minimizer of J(z) = φ*(z1 + y) − z by safeguarded Newton on
/// J'(z) = 1ᵀ∇φ*(z1 + y) − 1 over a bracket found by doubling.
double minimize_J(const BregmanGeometry& geom, const Vector& y);

struct HyperplaneProjection {
  Vector theta;
  double multiplier = 0.0;
};

/// argmin_{θᵀ1 = 1} D_φ(θ; θ̃), computed as ∇φ*(z*1 + ∇φ(θ̃)).
HyperplaneProjection hyperplane_project(const BregmanGeometry& geom, const Vector& theta_tilde);

/// Same projection for θ̃ = ∇φ*(y), given by its conjugate point y. Avoids the
/// round trip ∇φ(∇φ*(y)), which loses digits when θ̃ is close to the boundary.
HyperplaneProjection hyperplane_project_conjugate(const BregmanGeometry& geom, const Vector& y);

}  // namespace spdalp
