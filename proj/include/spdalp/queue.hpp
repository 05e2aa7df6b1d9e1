#pragma once

#include <array>
#include <memory>
#include <string_view>
#include <vector>

#include "spdalp/features.hpp"
#include "spdalp/mdp.hpp"
#include "spdalp/spd.hpp"

namespace spdalp {

/// How arrival/departure probabilities are combined within one time slot.
enum class QueueKernel {
  product,          // up ρ(1−a), down a(1−ρ): one Bernoulli arrival and one departure per slot
  literal_clamped,  // up ρ, down min(a, 1−ρ)
};

std::string_view to_string(QueueKernel kernel);
QueueKernel parse_queue_kernel(std::string_view text);

/**
 * Single queue with controlled service rate. States are the queue lengths
 * 1..L (index s−1), actions are service probabilities, and the per-step cost
 * is s² + 60a³. Moves past either end of the buffer turn into self-loops;
 * the chain starts at s = 1.
 */
struct QueueSpec {
  int buffer = 100;
  double arrival = 0.5;
  std::vector<double> actions{0.2, 0.4, 0.6, 0.8};
  double gamma = 1.0;
  QueueKernel kernel = QueueKernel::product;

  void validate() const;
};

double queue_cost(int queue_length, double service_rate);

Mdp build_queue_mdp(const QueueSpec& spec);

/// The two state-independent base policies (0.25, 0.25, 0.25, 0.25) and
/// (0.3, 0.3, 0.2, 0.2). Requires exactly four actions.
std::array<RandomizedPolicy, 2> make_base_policies(const QueueSpec& spec);

/// Oracle and generative sampler over one queue instance.
struct QueueSampler {
  std::unique_ptr<FeatureSamplingOracle> oracle;
  std::unique_ptr<MdpTransitionSampler> transitions;
};

QueueSampler queue_sampler(const Mdp& mdp, const FeatureMatrix& fm);

}  // namespace spdalp
