#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace spdalp {

class Mdp;

/// Every stochastic component owns one of these, seeded per run.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits; identical on every
/// standard library, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Inverse-CDF sampler over a fixed finite distribution.
class Categorical {
 public:
  Categorical() = default;
  explicit Categorical(std::span<const double> weights);
  template <typename Derived>
  static Categorical from(const Eigen::DenseBase<Derived>& weights) {
    std::vector<double> w(static_cast<std::size_t>(weights.size()));
    for (Eigen::Index i = 0; i < weights.size(); ++i) w[static_cast<std::size_t>(i)] = weights(i);
    return Categorical(w);
  }

  Eigen::Index draw(Rng& rng) const;
  Eigen::Index size() const { return static_cast<Eigen::Index>(cdf_.size()); }

 private:
  std::vector<double> cdf_;
  Eigen::Index last_positive_ = 0;
};

/// Generative access to an environment: start states and next states.
class TransitionSampler {
 public:
  virtual ~TransitionSampler() = default;
  virtual Eigen::Index states() const = 0;
  virtual Eigen::Index actions() const = 0;
  virtual Eigen::Index initial_state(Rng& rng) const = 0;
  virtual Eigen::Index next_state(Eigen::Index s, Eigen::Index a, Rng& rng) const = 0;
};

/// TransitionSampler backed by the tabular kernel of an Mdp.
class MdpTransitionSampler final : public TransitionSampler {
 public:
  explicit MdpTransitionSampler(const Mdp& mdp);

  Eigen::Index states() const override { return states_; }
  Eigen::Index actions() const override { return actions_; }
  Eigen::Index initial_state(Rng& rng) const override { return initial_.draw(rng); }
  Eigen::Index next_state(Eigen::Index s, Eigen::Index a, Rng& rng) const override;

 private:
  Eigen::Index states_;
  Eigen::Index actions_;
  Categorical initial_;
  std::vector<Categorical> rows_;  // indexed by flat (s, a)
};

}  // namespace spdalp
