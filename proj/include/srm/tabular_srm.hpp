#pragma once

#include <cstddef>
#include <vector>

#include "srm/environments.hpp"
#include "srm/quantile_dist.hpp"
#include "srm/risk_functional.hpp"
#include "srm/risk_spectra.hpp"

namespace srm {

/// Transition out of an extended state under one action. `child` is -1 when
/// the horizon is reached after this step.
struct ExtendedEdge {
  double prob = 0.0;
  double reward = 0.0;
  int child = -1;
};

struct ExtendedNode {
  std::size_t t = 0;
  std::size_t x = 0;
  double s = 0.0;
  double c = 1.0;
  std::vector<std::vector<ExtendedEdge>> edges;  // per action
};

/// Every extended state (t, x, s, c) reachable under some policy, as a DAG in
/// topological order (parents before children). States with equal s up to
/// 1e-9 are merged.
class ExtendedStateSpace {
 public:
  explicit ExtendedStateSpace(const TabularMdp& mdp);

  std::size_t size() const { return nodes_.size(); }
  std::size_t num_actions() const { return num_actions_; }
  double gamma() const { return gamma_; }
  const ExtendedNode& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<ExtendedNode>& nodes() const { return nodes_; }
  /// (node index, initial probability) pairs.
  const std::vector<std::pair<std::size_t, double>>& roots() const { return roots_; }

 private:
  std::vector<ExtendedNode> nodes_;
  std::vector<std::pair<std::size_t, double>> roots_;
  std::size_t num_actions_ = 0;
  double gamma_ = 0.0;
};

/// Action probabilities per extended state.
struct TabularPolicy {
  std::vector<std::vector<double>> probs;

  static TabularPolicy uniform(const ExtendedStateSpace& space);
  /// choice[i] is the action taken at node i.
  static TabularPolicy deterministic(const ExtendedStateSpace& space,
                                     const std::vector<std::size_t>& choice);
};

/// Softmax over logits theta(node, a).
struct SoftmaxPolicy {
  std::vector<std::vector<double>> logits;

  static SoftmaxPolicy zeros(const ExtendedStateSpace& space);
  TabularPolicy probabilities() const;
};

/// Exact laws of the return-to-go G from every node and node-action, and of G from xi0.
struct ExactReturnLaw {
  DiscreteLaw initial;
  std::vector<DiscreteLaw> node;
  std::vector<std::vector<DiscreteLaw>> node_action;
};

/// Throws SizeError when the number of trajectories exceeds `max_paths`.
ExactReturnLaw exact_return_distribution(const ExtendedStateSpace& space,
                                         const TabularPolicy& policy,
                                         double max_paths = 1e7);

/// Q_h(x, a) = E[h(s + c G(x, a))] / c and V_h = sum_a pi(a|x) Q_h(x, a).
struct HValues {
  std::vector<std::vector<double>> q;
  std::vector<double> v;
  double j = 0.0;  // J(pi, h) = E_{xi0}[V_h]
};

HValues evaluate_h(const ExtendedStateSpace& space, const TabularPolicy& policy,
                   const PiecewiseLinearH& h);
/// Same quantities computed from the exact return laws.
HValues evaluate_h(const ExtendedStateSpace& space, const ExactReturnLaw& laws,
                   const TabularPolicy& policy, const PiecewiseLinearH& h);

/// A_h(x, a) = Q_h(x, a) - V_h(x).
std::vector<std::vector<double>> exact_advantage(const ExtendedStateSpace& space,
                                                 const TabularPolicy& policy,
                                                 const PiecewiseLinearH& h);

/// Probability of visiting each node (at its own time step) under the policy.
std::vector<double> visitation(const ExtendedStateSpace& space, const TabularPolicy& policy);

struct NpgConfig {
  std::size_t iterations = 200;
  double eta = 0.5;
  bool robbins_monro = false;  // eta_t = eta / (1 + t / 1000)
  bool check_monotone = true;  // J(pi_t, h) must not drop by more than 1e-10
};

struct NpgResult {
  SoftmaxPolicy policy;
  std::vector<double> j_history;  // J(pi_t, h) for t = 0..iterations
};

/// theta += eta_t / (1 - gamma) * A_h at every node.
NpgResult npg_inner_loop(const ExtendedStateSpace& space, SoftmaxPolicy policy,
                         const PiecewiseLinearH& h, const NpgConfig& config);

struct BilevelConfig {
  std::size_t outer_iterations = 20;
  std::size_t quantiles = 50;
  NpgConfig inner;
};

struct BilevelResult {
  SoftmaxPolicy policy;
  std::vector<double> srm_history;        // SRM(G^{pi_k}), k = 0..outer
  std::vector<double> surrogate_history;  // E[h_k(G^{pi_k})] at each refresh
  PiecewiseLinearH last_h;                // built from pi_{outer - 1}
  ExactReturnLaw final_law;
};

/// Alternates h <- build_h(spectrum, quantiles of G^{pi_k}) and the NPG inner loop,
/// starting from the uniform policy.
BilevelResult bilevel_train(const TabularMdp& mdp, const RiskSpectrum& spectrum,
                            const BilevelConfig& config);

struct PerfDiff {
  double lhs = 0.0;  // J(pi', h) - J(pi, h)
  double rhs = 0.0;  // sum_t gamma^t E_{pi'}[A_h^pi(x_t, a_t)]
};

PerfDiff perf_diff_check(const ExtendedStateSpace& space, const TabularPolicy& pi,
                         const TabularPolicy& pi_prime, const PiecewiseLinearH& h);

}  // namespace srm
