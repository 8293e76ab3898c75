#include "srm/tabular_srm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "srm/errors.hpp"

namespace srm {

ExtendedStateSpace::ExtendedStateSpace(const TabularMdp& mdp)
    : num_actions_(mdp.num_actions), gamma_(mdp.gamma) {
  mdp.validate();
  using Key = std::tuple<std::size_t, std::size_t, long long>;
  std::map<Key, std::size_t> index;
  auto intern = [&](std::size_t t, std::size_t x, double s, double c) {
    const Key key{t, x, std::llround(s * 1e9)};
    auto [it, inserted] = index.try_emplace(key, nodes_.size());
    if (inserted) nodes_.push_back(ExtendedNode{t, x, s, c, {}});
    return it->second;
  };
  for (std::size_t x = 0; x < mdp.num_states; ++x) {
    if (mdp.xi0[x] > 0.0) roots_.emplace_back(intern(0, x, 0.0, 1.0), mdp.xi0[x]);
  }
  // nodes_ grows while we iterate; new nodes always sit at a later time step
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const ExtendedNode cur = nodes_[i];
    const bool last = cur.t + 1 >= mdp.horizon;
    std::vector<std::vector<ExtendedEdge>> edges(num_actions_);
    for (std::size_t a = 0; a < num_actions_; ++a) {
      for (const auto& outcome : mdp.reward(cur.x, a)) {
        if (outcome.prob <= 0.0) continue;
        for (std::size_t y = 0; y < mdp.num_states; ++y) {
          const double py = mdp.p(cur.x, a, y);
          if (py <= 0.0) continue;
          int child = -1;
          if (!last) {
            child = static_cast<int>(
                intern(cur.t + 1, y, cur.s + cur.c * outcome.value, cur.c * mdp.gamma));
          }
          edges[a].push_back(ExtendedEdge{outcome.prob * py, outcome.value, child});
        }
      }
    }
    nodes_[i].edges = std::move(edges);
  }
}

TabularPolicy TabularPolicy::uniform(const ExtendedStateSpace& space) {
  const double p = 1.0 / static_cast<double>(space.num_actions());
  return TabularPolicy{std::vector<std::vector<double>>(
      space.size(), std::vector<double>(space.num_actions(), p))};
}

TabularPolicy TabularPolicy::deterministic(const ExtendedStateSpace& space,
                                           const std::vector<std::size_t>& choice) {
  if (choice.size() != space.size()) throw InputError("deterministic policy: wrong node count");
  TabularPolicy pi{std::vector<std::vector<double>>(space.size(),
                                                    std::vector<double>(space.num_actions(), 0.0))};
  for (std::size_t i = 0; i < choice.size(); ++i) {
    if (choice[i] >= space.num_actions()) throw InputError("deterministic policy: bad action");
    pi.probs[i][choice[i]] = 1.0;
  }
  return pi;
}

SoftmaxPolicy SoftmaxPolicy::zeros(const ExtendedStateSpace& space) {
  return SoftmaxPolicy{std::vector<std::vector<double>>(
      space.size(), std::vector<double>(space.num_actions(), 0.0))};
}

TabularPolicy SoftmaxPolicy::probabilities() const {
  TabularPolicy pi;
  pi.probs.reserve(logits.size());
  for (const auto& row : logits) {
    const double m = *std::max_element(row.begin(), row.end());
    std::vector<double> p(row.size());
    double z = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a) {
      p[a] = std::exp(row[a] - m);
      z += p[a];
    }
    for (double& v : p) v /= z;
    pi.probs.push_back(std::move(p));
  }
  return pi;
}

namespace {

void check_policy(const ExtendedStateSpace& space, const TabularPolicy& policy) {
  if (policy.probs.size() != space.size()) throw InputError("policy: node count mismatch");
  for (const auto& row : policy.probs) {
    if (row.size() != space.num_actions()) throw InputError("policy: action count mismatch");
  }
}

double count_paths(const ExtendedStateSpace& space) {
  std::vector<double> paths(space.size(), 0.0);
  for (std::size_t i = space.size(); i-- > 0;) {
    for (const auto& action_edges : space.node(i).edges) {
      for (const auto& e : action_edges) paths[i] += e.child < 0 ? 1.0 : paths[e.child];
    }
  }
  double total = 0.0;
  for (const auto& [root, p] : space.roots()) total += paths[root];
  return total;
}

}  // namespace

ExactReturnLaw exact_return_distribution(const ExtendedStateSpace& space,
                                         const TabularPolicy& policy, double max_paths) {
  check_policy(space, policy);
  const double paths = count_paths(space);
  if (paths > max_paths) {
    throw SizeError("exact_return_distribution: " + std::to_string(paths) +
                    " trajectories exceed the enumeration budget");
  }
  const double gamma = space.gamma();
  ExactReturnLaw out;
  out.node.resize(space.size());
  out.node_action.resize(space.size());
  for (std::size_t i = space.size(); i-- > 0;) {
    const ExtendedNode& n = space.node(i);
    std::vector<std::pair<double, double>> mix;
    out.node_action[i].resize(space.num_actions());
    for (std::size_t a = 0; a < space.num_actions(); ++a) {
      std::vector<std::pair<double, double>> entries;
      for (const auto& e : n.edges[a]) {
        if (e.child < 0) {
          entries.emplace_back(e.reward, e.prob);
          continue;
        }
        const DiscreteLaw& sub = out.node[e.child];
        for (std::size_t k = 0; k < sub.size(); ++k) {
          entries.emplace_back(e.reward + gamma * sub.values[k], e.prob * sub.probs[k]);
        }
      }
      out.node_action[i][a] = make_discrete_law(entries);
      const double pa = policy.probs[i][a];
      if (pa <= 0.0) continue;
      const DiscreteLaw& la = out.node_action[i][a];
      for (std::size_t k = 0; k < la.size(); ++k) mix.emplace_back(la.values[k], pa * la.probs[k]);
    }
    out.node[i] = make_discrete_law(std::move(mix));
  }
  std::vector<std::pair<double, double>> init;
  for (const auto& [root, p] : space.roots()) {
    const DiscreteLaw& l = out.node[root];
    for (std::size_t k = 0; k < l.size(); ++k) init.emplace_back(l.values[k], p * l.probs[k]);
  }
  out.initial = make_discrete_law(std::move(init));
  return out;
}

HValues evaluate_h(const ExtendedStateSpace& space, const TabularPolicy& policy,
                   const PiecewiseLinearH& h) {
  check_policy(space, policy);
  // u[i] = E[h(s_T) | node i] where s_T is the terminal accumulated return
  std::vector<double> u(space.size(), 0.0);
  HValues out;
  out.q.assign(space.size(), std::vector<double>(space.num_actions(), 0.0));
  out.v.assign(space.size(), 0.0);
  for (std::size_t i = space.size(); i-- > 0;) {
    const ExtendedNode& n = space.node(i);
    for (std::size_t a = 0; a < space.num_actions(); ++a) {
      double ua = 0.0;
      for (const auto& e : n.edges[a]) {
        ua += e.prob * (e.child < 0 ? h.value(n.s + n.c * e.reward) : u[e.child]);
      }
      out.q[i][a] = ua / n.c;
      u[i] += policy.probs[i][a] * ua;
    }
    out.v[i] = u[i] / n.c;
  }
  for (const auto& [root, p] : space.roots()) out.j += p * out.v[root];
  return out;
}

HValues evaluate_h(const ExtendedStateSpace& space, const ExactReturnLaw& laws,
                   const TabularPolicy& policy, const PiecewiseLinearH& h) {
  check_policy(space, policy);
  auto expect = [&](const DiscreteLaw& law, double s, double c) {
    double total = 0.0;
    for (std::size_t k = 0; k < law.size(); ++k) total += law.probs[k] * h.value(s + c * law.values[k]);
    return total / c;
  };
  HValues out;
  out.q.assign(space.size(), std::vector<double>(space.num_actions(), 0.0));
  out.v.assign(space.size(), 0.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    const ExtendedNode& n = space.node(i);
    for (std::size_t a = 0; a < space.num_actions(); ++a) {
      out.q[i][a] = expect(laws.node_action[i][a], n.s, n.c);
      out.v[i] += policy.probs[i][a] * out.q[i][a];
    }
  }
  for (const auto& [root, p] : space.roots()) out.j += p * out.v[root];
  return out;
}

std::vector<std::vector<double>> exact_advantage(const ExtendedStateSpace& space,
                                                 const TabularPolicy& policy,
                                                 const PiecewiseLinearH& h) {
  HValues hv = evaluate_h(space, policy, h);
  for (std::size_t i = 0; i < space.size(); ++i) {
    for (double& q : hv.q[i]) q -= hv.v[i];
  }
  return std::move(hv.q);
}

std::vector<double> visitation(const ExtendedStateSpace& space, const TabularPolicy& policy) {
  check_policy(space, policy);
  std::vector<double> p(space.size(), 0.0);
  for (const auto& [root, prob] : space.roots()) p[root] += prob;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (p[i] == 0.0) continue;
    const ExtendedNode& n = space.node(i);
    for (std::size_t a = 0; a < space.num_actions(); ++a) {
      const double pa = policy.probs[i][a];
      if (pa == 0.0) continue;
      for (const auto& e : n.edges[a]) {
        if (e.child >= 0) p[e.child] += p[i] * pa * e.prob;
      }
    }
  }
  return p;
}

NpgResult npg_inner_loop(const ExtendedStateSpace& space, SoftmaxPolicy policy,
                         const PiecewiseLinearH& h, const NpgConfig& config) {
  constexpr double kThetaLimit = 1e6;
  constexpr double kMonotoneTol = 1e-10;
  const double scale = 1.0 / (1.0 - space.gamma());
  NpgResult out;
  HValues hv = evaluate_h(space, policy.probabilities(), h);
  out.j_history.push_back(hv.j);
  for (std::size_t t = 0; t < config.iterations; ++t) {
    const double eta =
        config.robbins_monro ? config.eta / (1.0 + static_cast<double>(t) / 1000.0) : config.eta;
    for (std::size_t i = 0; i < space.size(); ++i) {
      for (std::size_t a = 0; a < space.num_actions(); ++a) {
        double& theta = policy.logits[i][a];
        theta += eta * scale * (hv.q[i][a] - hv.v[i]);
        if (!(std::abs(theta) <= kThetaLimit)) {
          throw InstabilityError("npg_inner_loop: logit magnitude exceeded 1e6 at iteration " +
                                 std::to_string(t));
        }
      }
    }
    const double previous = hv.j;
    hv = evaluate_h(space, policy.probabilities(), h);
    out.j_history.push_back(hv.j);
    if (config.check_monotone && hv.j < previous - kMonotoneTol) {
      throw InternalError("npg_inner_loop: J(pi, h) decreased at iteration " + std::to_string(t));
    }
  }
  out.policy = std::move(policy);
  return out;
}

BilevelResult bilevel_train(const TabularMdp& mdp, const RiskSpectrum& spectrum,
                            const BilevelConfig& config) {
  const ExtendedStateSpace space(mdp);
  BilevelResult out;
  out.policy = SoftmaxPolicy::zeros(space);
  ExactReturnLaw law = exact_return_distribution(space, out.policy.probabilities());
  out.srm_history.push_back(srm_of_law(spectrum, law.initial));
  for (std::size_t k = 0; k < config.outer_iterations; ++k) {
    PiecewiseLinearH h = build_h(spectrum, law_quantiles(law.initial, config.quantiles));
    NpgResult inner = npg_inner_loop(space, std::move(out.policy), h, config.inner);
    out.surrogate_history.push_back(inner.j_history.front());
    out.policy = std::move(inner.policy);
    law = exact_return_distribution(space, out.policy.probabilities());
    out.srm_history.push_back(srm_of_law(spectrum, law.initial));
    out.last_h = std::move(h);
  }
  out.final_law = std::move(law);
  return out;
}

PerfDiff perf_diff_check(const ExtendedStateSpace& space, const TabularPolicy& pi,
                         const TabularPolicy& pi_prime, const PiecewiseLinearH& h) {
  const HValues base = evaluate_h(space, pi, h);
  const HValues other = evaluate_h(space, pi_prime, h);
  const std::vector<double> visits = visitation(space, pi_prime);
  PerfDiff out;
  out.lhs = other.j - base.j;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (visits[i] == 0.0) continue;
    const ExtendedNode& n = space.node(i);
    double adv = 0.0;
    for (std::size_t a = 0; a < space.num_actions(); ++a) {
      adv += pi_prime.probs[i][a] * (base.q[i][a] - base.v[i]);
    }
    out.rhs += n.c * visits[i] * adv;
  }
  return out;
}

}  // namespace srm
