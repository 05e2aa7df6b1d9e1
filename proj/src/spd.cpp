#include "spdalp/spd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spdalp/errors.hpp"

namespace spdalp {

FeatureSamplingOracle::FeatureSamplingOracle(const Mdp& mdp, const FeatureMatrix& fm)
    : actions_(mdp.actions()), costs_(mdp.flat_costs()) {
  if (fm.pairs() != mdp.pairs()) throw DimensionError("feature rows do not match the MDP");
  if (fm.dims() < 1) throw DimensionError("feature matrix has no columns");
  columns_.reserve(static_cast<std::size_t>(fm.dims()));
  for (Eigen::Index i = 0; i < fm.dims(); ++i) columns_.push_back(Categorical::from(fm.psi.col(i)));
}

OracleSample FeatureSamplingOracle::draw(Rng& rng) const {
  const auto d = static_cast<double>(columns_.size());
  auto i = static_cast<Eigen::Index>(uniform01(rng) * d);
  i = std::min<Eigen::Index>(i, static_cast<Eigen::Index>(columns_.size()) - 1);
  const Eigen::Index j = columns_[static_cast<std::size_t>(i)].draw(rng);
  return {i, j / actions_, j % actions_, costs_(j)};
}

double LearningRate::at(std::int64_t t) const {
  if (schedule == StepSchedule::constant) return value;
  return 1.0 / std::sqrt(static_cast<double>(t) + 1.0);
}

double DualRadius::beta(std::int64_t iterations) const {
  return t_quarter ? std::pow(static_cast<double>(iterations), 0.25) : value;
}

double dual_bound(double gamma, double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  if (gamma >= 1.0) return beta;
  return std::max(1.0 / (1.0 - gamma), beta);
}

std::string_view to_string(DualMode mode) {
  return mode == DualMode::rescale_only ? "rescale-only" : "clip-then-rescale";
}

std::string_view to_string(DualSign sign) { return sign == DualSign::lagrangian ? "lagrangian" : "as-written"; }

DualMode parse_dual_mode(std::string_view text) {
  if (text == "rescale-only") return DualMode::rescale_only;
  if (text == "clip-then-rescale") return DualMode::clip_then_rescale;
  throw DomainError("unknown dual mode '" + std::string(text) + "'");
}

DualSign parse_dual_sign(std::string_view text) {
  if (text == "lagrangian") return DualSign::lagrangian;
  if (text == "as-written") return DualSign::as_written;
  throw DomainError("unknown dual sign '" + std::string(text) + "'");
}

Vector stochastic_primal_gradient(const Vector& lambda, const OracleSample& sample, const FeatureMatrix& fm) {
  if (lambda.size() != fm.pairs()) throw DimensionError("multiplier length does not match the features");
  const Eigen::Index j = flat_index(sample.state, sample.action, fm.actions);
  if (j < 0 || j >= fm.pairs()) throw DimensionError("sample outside the state-action space");
  const auto row = fm.psi.row(j);
  const double mixture = row.mean();
  if (!(mixture > 0.0)) {
    throw SamplingSupportError("sampled pair (" + std::to_string(sample.state) + ", " + std::to_string(sample.action) +
                               ") has zero mass under every feature column");
  }
  return ((sample.cost - lambda(j)) / mixture) * row.transpose();
}

Vector dual_gradient(const Vector& theta, const FeatureMatrix& fm) {
  if (theta.size() != fm.dims()) throw DimensionError("theta length does not match the features");
  return fm.psi * theta;
}

PrimalStep primal_step(const Vector& theta, const Vector& grad, double eta, const BregmanGeometry& geom) {
  if (theta.size() != grad.size()) throw DimensionError("gradient length does not match theta");
  PrimalStep out;
  Vector current = theta;
  out.clamped = geom.clamp_to_domain(current);
  const Vector y = geom.grad_phi(current) - eta * grad;
  out.theta = hyperplane_project_conjugate(geom, y).theta;
  return out;
}

Vector dual_step(const Vector& lambda, const Vector& direction, double eta, double g_beta, DualMode mode) {
  if (lambda.size() != direction.size()) throw DimensionError("dual direction length does not match lambda");
  Vector u = lambda + eta * direction;
  if (mode == DualMode::clip_then_rescale) u = u.cwiseMax(0.0);
  return (g_beta / std::max(g_beta, u.norm())) * u;
}

double violation(const Vector& theta, const FeatureMatrix& fm) {
  return 0.5 * dual_gradient(theta, fm).cwiseMin(0.0).norm();
}

RandomizedPolicy extract_policy(const Vector& theta, const FeatureMatrix& fm) {
  const Vector x = dual_gradient(theta, fm);
  const Eigen::Index m = fm.actions, n = fm.states();
  Matrix table(n, m);
  for (Eigen::Index s = 0; s < n; ++s) {
    const Vector row = x.segment(s * m, m).cwiseMax(0.0);
    const double total = row.sum();
    if (total > 0.0) {
      table.row(s) = row.transpose() / total;
    } else {
      table.row(s).setConstant(1.0 / static_cast<double>(m));
    }
  }
  return RandomizedPolicy(std::move(table));
}

double importance_weight_bound(const FeatureMatrix& fm, const BregmanGeometry& geom) {
  double bound = 0.0;
  for (Eigen::Index j = 0; j < fm.pairs(); ++j) {
    const Vector row = fm.psi.row(j).transpose();
    const double mixture = row.mean();
    if (mixture > 0.0) bound = std::max(bound, geom.dual_norm(row / mixture));
  }
  return bound;
}

namespace {

void check_start(const Vector& theta0, const FeatureMatrix& fm, const BregmanGeometry& geom) {
  if (theta0.size() != fm.dims()) throw DimensionError("theta0 length does not match the features");
  if (std::abs(theta0.sum() - 1.0) > 1e-10) throw DomainError("theta0 must satisfy θᵀ1 = 1");
  if (!geom.interior(theta0)) throw DomainError("theta0 must lie strictly inside the geometry domain");
}

TraceRecord checkpoint(std::int64_t t, const SolverState& state, const FeatureMatrix& fm, const Vector* costs) {
  const Vector average = state.theta_average();
  TraceRecord r;
  r.t = t;
  const Vector x = fm.psi * state.theta;
  const Vector x_avg = fm.psi * average;
  r.violation = 0.5 * x.cwiseMin(0.0).norm();
  r.avg_violation = 0.5 * x_avg.cwiseMin(0.0).norm();
  r.objective = costs ? costs->dot(x) : std::nan("");
  r.avg_objective = costs ? costs->dot(x_avg) : std::nan("");
  r.lambda_norm = state.lambda.norm();
  return r;
}

}  // namespace

RunTrace run_spd(const SpdConfig& cfg, const FeatureMatrix& fm, const SamplingOracle& oracle, const Mdp* evaluator) {
  if (cfg.iterations < 1) throw DomainError("iteration count must be at least 1");
  if (fm.dims() < 1) throw DimensionError("feature matrix has no columns");
  const auto geom = make_geometry(cfg.geometry, cfg.radius);
  if (!geom->hyperplane_feasible(fm.dims())) {
    throw InfeasibleGeometryError("radius too small for the hyperplane θᵀ1 = 1 in dimension " +
                                  std::to_string(fm.dims()));
  }
  const Vector theta0 = cfg.theta0.value_or(Vector::Constant(fm.dims(), 1.0 / static_cast<double>(fm.dims())));
  check_start(theta0, fm, *geom);
  if (cfg.eta.schedule == StepSchedule::constant && !(cfg.eta.value > 0.0)) {
    throw DomainError("constant learning rate must be positive");
  }
  std::optional<Vector> costs;
  if (evaluator) {
    if (evaluator->pairs() != fm.pairs()) throw DimensionError("evaluation MDP does not match the features");
    costs = evaluator->flat_costs();
  }

  const double g_beta = dual_bound(cfg.gamma, cfg.beta.beta(cfg.iterations));
  const std::int64_t stride = cfg.stride > 0 ? cfg.stride : default_stride(cfg.iterations);

  SolverState state;
  state.theta = theta0;
  state.lambda = Vector::Zero(fm.pairs());
  state.theta_sum = Vector::Zero(fm.dims());
  state.lambda_sum = Vector::Zero(fm.pairs());

  RunTrace trace;
  trace.records.reserve(static_cast<std::size_t>((cfg.iterations + stride - 1) / stride));
  Rng rng(cfg.seed);
  try {
    for (std::int64_t t = 0; t < cfg.iterations; ++t) {
      const double eta = cfg.eta.at(t);
      state.theta_sum += eta * state.theta;
      state.lambda_sum += eta * state.lambda;
      state.eta_sum += eta;

      const OracleSample sample = oracle.draw(rng);
      const Vector grad = stochastic_primal_gradient(state.lambda, sample, fm);
      Vector ascent = dual_gradient(state.theta, fm);
      if (cfg.dual_sign == DualSign::lagrangian) ascent = -ascent;

      PrimalStep step = primal_step(state.theta, grad, eta, *geom);
      trace.boundary_clamps += step.clamped ? 1 : 0;
      state.lambda = dual_step(state.lambda, ascent, eta, g_beta, cfg.dual_mode);
      state.theta = std::move(step.theta);
      state.t = t + 1;

      if (cfg.check_invariants) {
        if (std::abs(state.theta.sum() - 1.0) > 1e-8) throw NumericError("iterate left the hyperplane");
        // Closed domain: far out in conjugate space ∇φ* can round onto the
        // boundary; the next step clamps before taking ∇φ.
        if (!(geom->norm(state.theta) <= geom->radius())) throw NumericError("iterate left the geometry domain");
        if (state.lambda.norm() > g_beta + 1e-12) throw NumericError("multiplier left the dual ball");
      }
      if (is_checkpoint(t, stride, cfg.iterations)) {
        trace.records.push_back(checkpoint(t + 1, state, fm, costs ? &*costs : nullptr));
      }
    }
  } catch (const Error& e) {
    trace.error = "iteration " + std::to_string(state.t + 1) + ": " + e.what();
  }

  trace.theta_hat = state.theta_average();
  trace.lambda_hat = state.lambda_average();
  trace.policy = extract_policy(trace.theta_hat, fm);
  return trace;
}

}  // namespace spdalp
