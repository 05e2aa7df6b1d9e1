#include "spdalp/queue.hpp"

#include <cmath>
#include <string>

#include "spdalp/errors.hpp"

namespace spdalp {

std::string_view to_string(QueueKernel kernel) {
  return kernel == QueueKernel::product ? "product" : "literal-clamped";
}

QueueKernel parse_queue_kernel(std::string_view text) {
  if (text == "product") return QueueKernel::product;
  if (text == "literal-clamped") return QueueKernel::literal_clamped;
  throw DomainError("unknown queue kernel '" + std::string(text) + "'");
}

void QueueSpec::validate() const {
  if (buffer < 2) throw DomainError("queue buffer must be at least 2");
  if (!(arrival > 0.0 && arrival < 1.0)) throw DomainError("arrival probability must lie in (0, 1)");
  if (actions.empty()) throw DomainError("queue needs at least one service rate");
  for (double a : actions) {
    if (!(a > 0.0 && a < 1.0)) throw DomainError("service rates must lie in (0, 1)");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("discount must lie in (0, 1]");
}

double queue_cost(int queue_length, double service_rate) {
  return static_cast<double>(queue_length) * queue_length + 60.0 * service_rate * service_rate * service_rate;
}

Mdp build_queue_mdp(const QueueSpec& spec) {
  spec.validate();
  const Eigen::Index n = spec.buffer;
  const auto m = static_cast<Eigen::Index>(spec.actions.size());
  std::vector<Matrix> transitions(static_cast<std::size_t>(m), Matrix::Zero(n, n));
  Matrix costs(m, n);
  for (Eigen::Index a = 0; a < m; ++a) {
    const double rate = spec.actions[static_cast<std::size_t>(a)];
    double up = 0.0, down = 0.0;
    if (spec.kernel == QueueKernel::product) {
      up = spec.arrival * (1.0 - rate);
      down = rate * (1.0 - spec.arrival);
    } else {
      up = spec.arrival;
      down = std::min(rate, 1.0 - spec.arrival);
    }
    Matrix& p = transitions[static_cast<std::size_t>(a)];
    for (Eigen::Index s = 0; s < n; ++s) {
      const double up_here = s + 1 < n ? up : 0.0;
      const double down_here = s > 0 ? down : 0.0;
      if (s + 1 < n) p(s, s + 1) = up_here;
      if (s > 0) p(s, s - 1) = down_here;
      p(s, s) = 1.0 - up_here - down_here;
      costs(a, s) = queue_cost(static_cast<int>(s + 1), rate);
    }
  }
  Vector alpha = Vector::Zero(n);
  alpha(0) = 1.0;
  return Mdp(std::move(transitions), std::move(costs), spec.gamma, std::move(alpha));
}

std::array<RandomizedPolicy, 2> make_base_policies(const QueueSpec& spec) {
  if (spec.actions.size() != 4) {
    throw DimensionError("the reference base policies are defined for four actions; supply custom rows instead");
  }
  const Eigen::Index n = spec.buffer;
  Eigen::RowVector4d first(0.25, 0.25, 0.25, 0.25);
  Eigen::RowVector4d second(0.3, 0.3, 0.2, 0.2);
  return {RandomizedPolicy(first.replicate(n, 1)), RandomizedPolicy(second.replicate(n, 1))};
}

QueueSampler queue_sampler(const Mdp& mdp, const FeatureMatrix& fm) {
  return {std::make_unique<FeatureSamplingOracle>(mdp, fm), std::make_unique<MdpTransitionSampler>(mdp)};
}

}  // namespace spdalp
