#pragma once

// Adapters between library objects and the oracle's path-enumeration view.

#include <map>
#include <stdexcept>

#include "oracles/oracles.hpp"
#include "srm/tabular_srm.hpp"

namespace testing_support {

/// Oracle policy reading the library's per-node probabilities.
inline oracle::PathPolicy path_policy(const srm::ExtendedStateSpace& space, const srm::TabularPolicy& policy) {
  std::map<oracle::DecisionKey, std::size_t> index;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& n = space.node(i);
    index[oracle::key_of(n.t, n.x, n.s)] = i;
  }
  return [index, probs = policy.probs](const oracle::DecisionKey& k) {
    const auto it = index.find(k);
    if (it == index.end()) throw std::logic_error("path_policy: oracle key not in extended space");
    return probs[it->second];
  };
}

inline std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

/// Random stochastic policy with every probability at least `floor`.
template <class Rng>
srm::TabularPolicy random_policy(const srm::ExtendedStateSpace& space, Rng& rng, double floor = 0.02) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  srm::TabularPolicy p = srm::TabularPolicy::uniform(space);
  for (auto& row : p.probs) {
    double total = 0.0;
    for (auto& v : row) total += (v = floor + unif(rng));
    for (auto& v : row) v /= total;
  }
  return p;
}

}  // namespace testing_support
