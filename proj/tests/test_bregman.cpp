#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "spdalp/bregman.hpp"
#include "spdalp/errors.hpp"

using namespace spdalp;
using namespace spdalp::testing;
using doctest::Approx;

namespace {

// Uniform direction, radius a random fraction of R in the geometry's norm.
Vector interior_point(const BregmanGeometry& g, Eigen::Index d, Rng& rng, double max_fraction = 0.99) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = 2.0 * uniform01(rng) - 1.0;
  return v * (max_fraction * uniform01(rng) * g.radius() / g.norm(v));
}

// Random point of the hyperplane inside the domain (rejection sampling).
Vector hyperplane_point(const BregmanGeometry& g, Eigen::Index d, Rng& rng, double scale) {
  while (true) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = scale * (2.0 * uniform01(rng) - 1.0);
    v.array() += (1.0 - v.sum()) / static_cast<double>(d);
    if (g.norm(v) < 0.99 * g.radius()) return v;
  }
}

}  // namespace

TEST_CASE("ball modulus formulas") {
  const BallModulus g(2.0);
  Vector t(2);
  t << 0.6, -1.2;
  const double root = std::sqrt(4.0 - 0.36 - 1.44);
  CHECK(g.phi(t) == Approx(-root));
  CHECK((g.grad_phi(t) - t / root).norm() <= 1e-15);
  Vector y(2);
  y << 0.3, 2.0;
  CHECK(g.phi_star(y) == Approx(2.0 * std::sqrt(1.0 + y.squaredNorm())));
  CHECK((g.grad_phi_star(y) - 2.0 * y / std::sqrt(1.0 + y.squaredNorm())).norm() <= 1e-15);
}

TEST_CASE("box modulus formulas") {
  const BoxModulus g(1.5);
  Vector t(2);
  t << 0.5, -1.0;
  CHECK(g.grad_phi(t)(0) == Approx(std::log(2.0 / 1.0)));
  CHECK(g.grad_phi(t)(1) == Approx(std::log(0.5 / 2.5)));
  const double expected = 2.0 * std::log(2.0) + 1.0 * std::log(1.0) + 0.5 * std::log(0.5) + 2.5 * std::log(2.5);
  CHECK(g.phi(t) == Approx(expected));
  Vector y(2);
  y << 0.4, -3.0;
  CHECK(g.grad_phi_star(y)(1) == Approx(1.5 * std::tanh(-1.5)));
  CHECK(g.grad_phi(Vector::Zero(3)).norm() == 0.0);
  CHECK(g.divergence(Vector::Zero(3), Vector::Zero(3)) == 0.0);
}

TEST_CASE("divergence examples") {
  const BallModulus unit(1.0);
  Vector a = Vector::Zero(2), b(2);
  b << 0.6, 0.0;
  CHECK(unit.divergence(a, b) == Approx(0.25).epsilon(1e-14));
  CHECK(unit.divergence(b, b) == 0.0);
  Vector outside(2);
  outside << 1.0, 0.0;
  CHECK_THROWS_AS(unit.divergence(a, outside), DomainError);
  // Boundary points are allowed in the first slot.
  CHECK(unit.divergence(outside, b) >= 0.0);
}

TEST_CASE("divergence matches its definition") {
  Rng rng(2);
  for (const char* name : {"ball", "box"}) {
    const auto g = make_geometry(name, 3.0);
    for (int k = 0; k < 100; ++k) {
      const Vector a = interior_point(*g, 4, rng), b = interior_point(*g, 4, rng);
      const double direct = g->phi(a) - g->phi(b) - (a - b).dot(g->grad_phi(b));
      CHECK(g->divergence(a, b) == Approx(direct).epsilon(1e-9).scale(1.0));
      CHECK(g->divergence(a, b) >= 0.0);
    }
  }
}

TEST_CASE("bijection, Fenchel equality and gradients") {
  Rng rng(3);
  for (const char* name : {"ball", "box"}) {
    for (double r : {0.5, 1.0, 100.0}) {
      const auto g = make_geometry(name, r);
      for (Eigen::Index d : {2, 5, 10}) {
        for (int k = 0; k < 100; ++k) {
          const Vector t = interior_point(*g, d, rng);
          const Vector y = g->grad_phi(t);
          CHECK((g->grad_phi_star(y) - t).lpNorm<Eigen::Infinity>() <= 1e-10 * std::max(1.0, r));
          const double scale = std::max({1.0, std::abs(g->phi(t)), std::abs(t.dot(y))});
          CHECK(std::abs(g->phi(t) + g->phi_star(y) - t.dot(y)) <= 1e-10 * scale);
        }
        for (int k = 0; k < 10; ++k) {
          const Vector t = interior_point(*g, d, rng, 0.9);
          const Vector fd = numeric_gradient([&](const Vector& x) { return g->phi(x); }, t, 1e-6 * r);
          CHECK((fd - g->grad_phi(t)).norm() <= 1e-5 * std::max(1.0, g->grad_phi(t).norm()));
          Vector y(d);
          for (Eigen::Index i = 0; i < d; ++i) y(i) = 4.0 * uniform01(rng) - 2.0;
          const Vector fds = numeric_gradient([&](const Vector& x) { return g->phi_star(x); }, y);
          CHECK((fds - g->grad_phi_star(y)).norm() <= 1e-5 * std::max(1.0, y.norm() * r));
          // Second derivative of J along the ones direction.
          const Vector ones = Vector::Ones(d);
          const double h = 1e-4;
          const double second = (g->phi_star(y + h * ones) - 2 * g->phi_star(y) + g->phi_star(y - h * ones)) / (h * h);
          CHECK(g->ones_curvature_star(y) == Approx(second).epsilon(1e-4).scale(r));
        }
      }
    }
  }
}

TEST_CASE("strong convexity in the geometry's own norm") {
  Rng rng(4);
  for (const char* name : {"ball", "box"}) {
    for (double r : {0.5, 1.0, 100.0}) {
      const auto g = make_geometry(name, r);
      for (int k = 0; k < 300; ++k) {
        const Vector a = interior_point(*g, 5, rng), b = interior_point(*g, 5, rng);
        const double n = g->norm(a - b);
        CHECK(g->divergence(a, b) - 0.5 * g->strong_convexity() * n * n >= -1e-9);
        // The unscaled ½‖·‖² bound is only claimed once σ ≥ 1.
        if (g->strong_convexity() >= 1.0) CHECK(g->divergence(a, b) - 0.5 * n * n >= -1e-9);
      }
    }
  }
}

TEST_CASE("closed-form multiplier") {
  const double r = 100.0;
  const BallModulus g(r);
  SUBCASE("paper-sized example against golden section") {
    Vector t(2);
    t << 0.8, 0.8;
    const Vector v = g.grad_phi(t);
    const double z = solve_z_ball(r, v);
    const double oracle = golden_min([&](double s) { return g.phi_star(Vector::Constant(2, s) + v) - s; }, -10, 10);
    CHECK(std::abs(z - oracle) <= 1e-8);
    CHECK(std::abs(z - minimize_J(g, v)) <= 1e-8);
  }
  SUBCASE("zero on the hyperplane") {
    Vector t(3);
    t << 0.2, 0.5, 0.3;
    CHECK(std::abs(solve_z_ball(r, g.grad_phi(t))) <= 1e-10);
    CHECK(std::abs(minimize_J(g, g.grad_phi(t))) <= 1e-10);
  }
  SUBCASE("random inputs against the numeric minimizer") {
    Rng rng(5);
    for (int k = 0; k < 1000; ++k) {
      const Eigen::Index d = 2 + static_cast<Eigen::Index>(uniform01(rng) * 9);
      const Vector v = g.grad_phi(interior_point(g, d, rng));
      CHECK(std::abs(solve_z_ball(r, v) - minimize_J(g, v)) <= 1e-8);
    }
  }
  SUBCASE("infeasible radius") {
    CHECK_THROWS_AS(solve_z_ball(0.5, Vector::Zero(2)), InfeasibleGeometryError);
    CHECK_THROWS_AS(solve_z_ball(1.0 / std::sqrt(2.0), Vector::Zero(2)), InfeasibleGeometryError);
  }
}

TEST_CASE("minimize_J") {
  SUBCASE("box, R=1, y=0") {
    const BoxModulus g(1.0);
    CHECK(minimize_J(g, Vector::Zero(2)) == Approx(2.0 * std::atanh(0.5)).epsilon(1e-12));
  }
  SUBCASE("derivative vanishes") {
    Rng rng(6);
    for (const char* name : {"ball", "box"}) {
      const auto g = make_geometry(name, 10.0);
      for (int k = 0; k < 100; ++k) {
        const Vector y = g->grad_phi(interior_point(*g, 4, rng));
        const double z = minimize_J(*g, y);
        CHECK(std::abs(g->grad_phi_star(Vector::Constant(4, z) + y).sum() - 1.0) <= 1e-10);
      }
    }
  }
  SUBCASE("box too small for the hyperplane") {
    const BoxModulus g(0.25);
    CHECK_THROWS_AS(minimize_J(g, Vector::Zero(3)), InfeasibleGeometryError);
  }
}

TEST_CASE("hyperplane projection") {
  SUBCASE("idempotent on the hyperplane") {
    const BallModulus g(5.0);
    Vector t(3);
    t << 2.0, -0.5, -0.5;
    CHECK((hyperplane_project(g, t).theta - t).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  SUBCASE("one dimension is a singleton") {
    for (const char* name : {"ball", "box"}) {
      const auto g = make_geometry(name, 2.0);
      CHECK(hyperplane_project(*g, Vector::Constant(1, -1.7)).theta(0) == Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("symmetric input goes to the barycenter") {
    for (const char* name : {"ball", "box"}) {
      const auto g = make_geometry(name, 10.0);
      const Vector p = hyperplane_project(*g, Vector::Constant(4, 2.3)).theta;
      CHECK((p.array() - 0.25).abs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("d=2, R=100 against a line search on the hyperplane") {
    const BallModulus g(100.0);
    Vector t(2);
    t << 0.8, 0.8;
    const Vector p = hyperplane_project(g, t).theta;
    auto along = [&](double s) {
      Vector x(2);
      x << s, 1.0 - s;
      return g.divergence(x, t);
    };
    const double s = golden_min(along, -70.0, 70.0);
    CHECK(std::abs(p(0) - s) <= 1e-6);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-10);
  }
  SUBCASE("optimality and generalized Pythagoras") {
    Rng rng(7);
    for (const char* name : {"ball", "box"}) {
      const auto g = make_geometry(name, 10.0);
      for (int k = 0; k < 20; ++k) {
        const Vector t = interior_point(*g, 3, rng);
        const Vector p = hyperplane_project(*g, t).theta;
        CHECK(g->interior(p));
        CHECK(std::abs(p.sum() - 1.0) <= 1e-10);
        const double dp = g->divergence(p, t);
        for (int j = 0; j < 100; ++j) {
          const Vector x = hyperplane_point(*g, 3, rng, 3.0);
          const double dx = g->divergence(x, t);
          CHECK(dx >= dp - 1e-9 * std::max(1.0, dx));
          CHECK(g->divergence(x, p) + dp <= dx + 1e-9 * std::max(1.0, dx));
        }
      }
    }
  }
  SUBCASE("conjugate entry point agrees") {
    Rng rng(8);
    const BallModulus g(50.0);
    for (int k = 0; k < 50; ++k) {
      const Vector t = interior_point(g, 5, rng);
      const Vector a = hyperplane_project(g, t).theta;
      const Vector b = hyperplane_project_conjugate(g, g.grad_phi(t)).theta;
      CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
  }
  SUBCASE("errors") {
    const BallModulus g(1.0);
    CHECK_THROWS_AS(hyperplane_project(g, Vector::Constant(2, 1.0)), DomainError);
    const BallModulus tiny(0.5);
    CHECK_THROWS_AS(hyperplane_project(tiny, Vector::Zero(3)), InfeasibleGeometryError);
    CHECK_THROWS_AS(make_geometry("simplex", 1.0), DomainError);
    CHECK_THROWS_AS(BallModulus(-1.0), DomainError);
  }
}

TEST_CASE("boundary guard") {
  const BallModulus g(1.0);
  Vector t(2);
  t << 3.0, 4.0;
  CHECK(g.clamp_to_domain(t));
  CHECK(t.norm() == Approx(1.0 - 1e-9).epsilon(1e-12));
  CHECK(g.interior(t));
  Vector inside(2);
  inside << 0.1, 0.2;
  CHECK_FALSE(g.clamp_to_domain(inside));
  const BoxModulus b(1.0);
  Vector c(2);
  c << 2.0, -0.5;
  CHECK(b.clamp_to_domain(c));
  CHECK(c(0) == Approx(1.0 - 1e-9));
  CHECK(c(1) == -0.5);
}
