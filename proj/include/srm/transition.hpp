#pragma once

#include <cstddef>
#include <vector>

namespace srm {

/// One extended-state transition. Discrete actions store the index as a single value.
struct TransitionRecord {
  std::size_t episode = 0;
  std::size_t t = 0;
  std::vector<double> state;
  double s = 0.0;
  double c = 1.0;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  double next_s = 0.0;
  double next_c = 1.0;
  bool done = false;

  friend bool operator==(const TransitionRecord&, const TransitionRecord&) = default;
};

}  // namespace srm
