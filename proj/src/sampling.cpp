#include "spdalp/sampling.hpp"

#include <algorithm>

#include "spdalp/errors.hpp"
#include "spdalp/mdp.hpp"

namespace spdalp {

Categorical::Categorical(std::span<const double> weights) {
  if (weights.empty()) throw DimensionError("categorical distribution needs at least one outcome");
  cdf_.reserve(weights.size());
  double total = 0.0;
  bool any_positive = false;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw DomainError("categorical weights must be nonnegative");
    if (weights[i] > 0.0) {
      any_positive = true;
      last_positive_ = static_cast<Eigen::Index>(i);
    }
    total += weights[i];
    cdf_.push_back(total);
  }
  if (!any_positive) throw DomainError("categorical weights are all zero");
  for (double& v : cdf_) v /= total;
}

Eigen::Index Categorical::draw(Rng& rng) const {
  const double u = uniform01(rng);
  // Zero-weight outcomes share their predecessor's cdf value and are skipped.
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) return last_positive_;
  return static_cast<Eigen::Index>(it - cdf_.begin());
}

MdpTransitionSampler::MdpTransitionSampler(const Mdp& mdp)
    : states_(mdp.states()), actions_(mdp.actions()), initial_(Categorical::from(mdp.alpha())) {
  rows_.reserve(static_cast<std::size_t>(mdp.pairs()));
  for (Eigen::Index s = 0; s < states_; ++s) {
    for (Eigen::Index a = 0; a < actions_; ++a) rows_.push_back(Categorical::from(mdp.transition(a).row(s)));
  }
}

Eigen::Index MdpTransitionSampler::next_state(Eigen::Index s, Eigen::Index a, Rng& rng) const {
  return rows_[static_cast<std::size_t>(flat_index(s, a, actions_))].draw(rng);
}

}  // namespace spdalp
