#include "spdalp/penalty.hpp"

#include <cmath>
#include <string>

#include "spdalp/errors.hpp"

namespace spdalp {

namespace {

// Residual entries this small are treated as sitting on the kink.
constexpr double kKink = 1e-12;

struct PenaltyModel {
  Vector costs;  // flat
  Matrix flow;   // d×n flow residual matrix S
};

PenaltyModel make_model(const FeatureMatrix& fm, const Mdp& mdp) {
  return {mdp.flat_costs(), stationarity_residual(fm, mdp)};
}

double objective(const Vector& theta, const FeatureMatrix& fm, const PenaltyModel& model, double omega) {
  const Vector x = fm.psi * theta;
  const Vector flow = model.flow.transpose() * theta;
  return model.costs.dot(x) + omega * x.cwiseMin(0.0).lpNorm<1>() + omega * flow.lpNorm<1>();
}

// ω Ψᵀσ + ω S sign(Sᵀθ), where σ marks the strictly negative entries of Ψθ.
Vector penalty_terms_gradient(const Vector& theta, const FeatureMatrix& fm, const PenaltyModel& model, double omega) {
  const Vector x = fm.psi * theta;
  const Vector negative = (x.array() < -kKink).cast<double>() * -1.0;
  const Vector flow = model.flow.transpose() * theta;
  const Vector flow_sign =
      flow.unaryExpr([](double r) { return std::abs(r) <= kKink ? 0.0 : (r > 0.0 ? 1.0 : -1.0); });
  return omega * (fm.psi.transpose() * negative + model.flow * flow_sign);
}

}  // namespace

std::string_view to_string(PenaltyGradient mode) { return mode == PenaltyGradient::full ? "full" : "sampled"; }

PenaltyGradient parse_penalty_gradient(std::string_view text) {
  if (text == "full" || text == "full-subgradient") return PenaltyGradient::full;
  if (text == "sampled") return PenaltyGradient::sampled;
  throw DomainError("unknown penalty gradient mode '" + std::string(text) + "'");
}

double penalty_objective(const Vector& theta, const FeatureMatrix& fm, const Mdp& mdp, double omega) {
  if (theta.size() != fm.dims()) throw DimensionError("theta length does not match the features");
  return objective(theta, fm, make_model(fm, mdp), omega);
}

Vector penalty_subgradient(const Vector& theta, const FeatureMatrix& fm, const Mdp& mdp, double omega) {
  if (theta.size() != fm.dims()) throw DimensionError("theta length does not match the features");
  const PenaltyModel model = make_model(fm, mdp);
  return fm.psi.transpose() * model.costs + penalty_terms_gradient(theta, fm, model, omega);
}

Vector project_ball_hyperplane(const Vector& theta, double radius) {
  const Eigen::Index d = theta.size();
  if (d < 1) throw DimensionError("empty point");
  const double dd = static_cast<double>(d);
  // The intersection is a (d−1)-sphere around (1/d)·1 of radius √(R² − 1/d).
  const double slack = radius * radius - 1.0 / dd;
  if (!(slack > 0.0)) throw InfeasibleGeometryError("ball of radius R does not cross the hyperplane θᵀ1 = 1");
  Vector x = theta.array() - (theta.sum() - 1.0) / dd;
  if (x.norm() <= radius) return x;
  const Vector center = Vector::Constant(d, 1.0 / dd);
  const Vector offset = x - center;
  return center + (std::sqrt(slack) / offset.norm()) * offset;
}

RunTrace run_penalty(const PenaltyConfig& cfg, const FeatureMatrix& fm, const Mdp& mdp) {
  if (cfg.iterations < 1) throw DomainError("iteration count must be at least 1");
  if (!(cfg.omega >= 0.0)) throw DomainError("penalty factor must be nonnegative");
  if (!(cfg.step_size() > 0.0)) throw DomainError("step size must be positive");
  if (fm.pairs() != mdp.pairs()) throw DimensionError("feature rows do not match the MDP");
  const Eigen::Index d = fm.dims();
  Vector theta = cfg.theta0.value_or(Vector::Constant(d, 1.0 / static_cast<double>(d)));
  if (theta.size() != d) throw DimensionError("theta0 length does not match the features");
  if (std::abs(theta.sum() - 1.0) > 1e-10 || theta.norm() > cfg.radius) {
    throw DomainError("theta0 must lie in the ball ∩ hyperplane");
  }

  const PenaltyModel model = make_model(fm, mdp);
  const Vector cost_gradient = fm.psi.transpose() * model.costs;
  std::optional<FeatureSamplingOracle> oracle;
  if (cfg.gradient == PenaltyGradient::sampled) oracle.emplace(mdp, fm);

  const std::int64_t stride = cfg.stride > 0 ? cfg.stride : default_stride(cfg.iterations);
  const double eta = cfg.step_size();
  Rng rng(cfg.seed);
  Vector sum = Vector::Zero(d);
  std::int64_t count = 0;
  RunTrace trace;
  try {
    for (std::int64_t t = 0; t < cfg.iterations; ++t) {
      sum += theta;
      ++count;
      Vector g = penalty_terms_gradient(theta, fm, model, cfg.omega);
      if (oracle) {
        const OracleSample sample = oracle->draw(rng);
        g += stochastic_primal_gradient(Vector::Zero(fm.pairs()), sample, fm);
      } else {
        g += cost_gradient;
      }
      theta = project_ball_hyperplane(theta - eta * g, cfg.radius);
      if (is_checkpoint(t, stride, cfg.iterations)) {
        const Vector average = sum / static_cast<double>(count);
        const Vector x = fm.psi * theta;
        const Vector x_avg = fm.psi * average;
        trace.records.push_back({t + 1, model.costs.dot(x), 0.5 * x.cwiseMin(0.0).norm(), model.costs.dot(x_avg),
                                 0.5 * x_avg.cwiseMin(0.0).norm(), 0.0});
      }
    }
  } catch (const Error& e) {
    trace.error = std::string("penalty run: ") + e.what();
  }
  trace.theta_hat = sum / static_cast<double>(std::max<std::int64_t>(count, 1));
  trace.lambda_hat = Vector::Zero(0);
  trace.policy = extract_policy(trace.theta_hat, fm);
  return trace;
}

}  // namespace spdalp
