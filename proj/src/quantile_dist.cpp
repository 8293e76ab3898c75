#include "srm/quantile_dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "srm/errors.hpp"

namespace srm {

QuantileDistribution::QuantileDistribution(std::vector<double> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw InputError("quantile distribution needs at least one atom");
  for (double q : atoms_) {
    if (!std::isfinite(q)) throw InputError("quantile distribution atoms must be finite");
  }
}

double QuantileDistribution::tau(std::size_t i, std::size_t n) {
  return static_cast<double>(i) / static_cast<double>(n);
}

double QuantileDistribution::tau_hat(std::size_t i, std::size_t n) {
  return static_cast<double>(2 * i + 1) / static_cast<double>(2 * n);
}

bool QuantileDistribution::is_canonical() const {
  return std::is_sorted(atoms_.begin(), atoms_.end());
}

QuantileDistribution QuantileDistribution::canonical() const {
  if (is_canonical()) return *this;
  std::vector<double> sorted = atoms_;
  std::sort(sorted.begin(), sorted.end());
  return QuantileDistribution(std::move(sorted));
}

double QuantileDistribution::mean() const {
  return std::accumulate(atoms_.begin(), atoms_.end(), 0.0) / static_cast<double>(atoms_.size());
}

double huber(double u, double kappa) {
  const double a = std::abs(u);
  return a <= kappa ? 0.5 * u * u : kappa * (a - 0.5 * kappa);
}

double huber_quantile_loss_into(std::span<const double> predicted,
                                std::span<const double> targets, double kappa,
                                std::span<double> gradient) {
  if (targets.empty()) throw InputError("huber_quantile_loss: empty target set");
  if (!(kappa > 0.0)) throw ParameterError("huber_quantile_loss: kappa must be positive");
  if (gradient.size() != predicted.size()) {
    throw InternalError("huber_quantile_loss: gradient buffer size mismatch");
  }
  const std::size_t n = predicted.size();
  const double inv_m = 1.0 / static_cast<double>(targets.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double level = QuantileDistribution::tau_hat(i, n);
    const double q = predicted[i];
    double li = 0.0;
    double gi = 0.0;
    for (double y : targets) {
      const double u = y - q;
      const double weight = u < 0.0 ? 1.0 - level : level;
      const double a = std::abs(u);
      if (a <= kappa) {
        li += weight * 0.5 * u * u;
        gi -= weight * u;
      } else {
        li += weight * kappa * (a - 0.5 * kappa);
        gi -= weight * (u < 0.0 ? -kappa : kappa);
      }
    }
    loss += li * inv_m;
    gradient[i] = gi * inv_m;
  }
  return loss;
}

HuberLossResult huber_quantile_loss(std::span<const double> predicted,
                                    std::span<const double> targets, double kappa) {
  HuberLossResult out;
  out.gradient.assign(predicted.size(), 0.0);
  out.loss = huber_quantile_loss_into(predicted, targets, kappa, out.gradient);
  return out;
}

HuberLossResult huber_quantile_loss(const QuantileDistribution& predicted,
                                    std::span<const double> targets, double kappa) {
  return huber_quantile_loss(predicted.atoms(), targets, kappa);
}

QuantileDistribution bellman_target(double reward, double gamma, const QuantileDistribution& next) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("bellman_target: gamma must lie in [0, 1)");
  std::vector<double> atoms(next.atoms().begin(), next.atoms().end());
  for (double& q : atoms) q = reward + gamma * q;
  return QuantileDistribution(std::move(atoms));
}

double cdf_at(const QuantileDistribution& dist, double z) {
  const auto atoms = dist.atoms();
  const auto count = std::count_if(atoms.begin(), atoms.end(), [z](double q) { return q <= z; });
  return static_cast<double>(count) / static_cast<double>(atoms.size());
}

QuantileDistribution empirical_quantiles(std::span<const double> samples, std::size_t n) {
  if (samples.empty()) throw InputError("empirical_quantiles: empty sample set");
  if (n == 0) throw InputError("empirical_quantiles: quantile count must be positive");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  std::vector<double> atoms(n);
  for (std::size_t i = 0; i < n; ++i) {
    // ceil((2i+1) M / (2N)) in integer arithmetic
    const std::size_t num = (2 * i + 1) * m;
    const std::size_t den = 2 * n;
    std::size_t idx = (num + den - 1) / den;
    idx = std::clamp<std::size_t>(idx, 1, m);
    atoms[i] = sorted[idx - 1];
  }
  return QuantileDistribution(std::move(atoms));
}

double DiscreteLaw::total_probability() const {
  return std::accumulate(probs.begin(), probs.end(), 0.0);
}

double DiscreteLaw::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) m += values[k] * probs[k];
  return m;
}

double DiscreteLaw::cdf(double z) const {
  double f = 0.0;
  for (std::size_t k = 0; k < values.size() && values[k] <= z; ++k) f += probs[k];
  return f;
}

double DiscreteLaw::cdf_left(double z) const {
  double f = 0.0;
  for (std::size_t k = 0; k < values.size() && values[k] < z; ++k) f += probs[k];
  return f;
}

DiscreteLaw make_discrete_law(std::vector<std::pair<double, double>> value_prob, double merge_tol) {
  std::sort(value_prob.begin(), value_prob.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  DiscreteLaw law;
  for (const auto& [v, p] : value_prob) {
    if (p <= 0.0) continue;
    if (!law.values.empty() &&
        std::abs(v - law.values.back()) <= merge_tol * std::max(1.0, std::abs(v))) {
      law.probs.back() += p;
    } else {
      law.values.push_back(v);
      law.probs.push_back(p);
    }
  }
  return law;
}

QuantileDistribution law_quantiles(const DiscreteLaw& law, std::size_t n) {
  if (law.values.empty()) throw InputError("law_quantiles: empty law");
  if (n == 0) throw InputError("law_quantiles: quantile count must be positive");
  std::vector<double> atoms(n);
  std::size_t k = 0;
  double cum = law.probs[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double level = QuantileDistribution::tau_hat(i, n);
    // 1e-12 slack absorbs rounding in the accumulated probabilities
    while (cum < level - 1e-12 && k + 1 < law.values.size()) {
      ++k;
      cum += law.probs[k];
    }
    atoms[i] = law.values[k];
  }
  return QuantileDistribution(std::move(atoms));
}

}  // namespace srm
