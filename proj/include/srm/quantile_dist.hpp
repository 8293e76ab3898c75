#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace srm {

/// N-atom quantile representation of a return distribution.
///
/// Atom i (0-based) sits at level tau_hat(i) = (2i+1)/(2N), the midpoint of
/// the cell (i/N, (i+1)/N]. Raw critic outputs need not be sorted; call
/// canonical() before using the distribution as an inverse CDF.
class QuantileDistribution {
 public:
  explicit QuantileDistribution(std::vector<double> atoms);

  std::size_t size() const { return atoms_.size(); }
  std::span<const double> atoms() const { return atoms_; }
  double operator[](std::size_t i) const { return atoms_[i]; }

  double tau_hat(std::size_t i) const { return tau_hat(i, size()); }
  static double tau(std::size_t i, std::size_t n);
  static double tau_hat(std::size_t i, std::size_t n);

  bool is_canonical() const;
  QuantileDistribution canonical() const;
  double mean() const;

  friend bool operator==(const QuantileDistribution&, const QuantileDistribution&) = default;

 private:
  std::vector<double> atoms_;
};

struct HuberLossResult {
  double loss = 0.0;
  std::vector<double> gradient;  // d loss / d predicted atom
};

double huber(double u, double kappa);

/// Quantile-regression Huber loss sum_i mean_j |tau_hat_i - 1{u_ij<0}| huber_k(u_ij)
/// with u_ij = target_j - predicted_i. Predicted atoms are used as given
/// (no sorting), matching QR-DQN training.
HuberLossResult huber_quantile_loss(std::span<const double> predicted,
                                    std::span<const double> targets, double kappa = 1.0);
HuberLossResult huber_quantile_loss(const QuantileDistribution& predicted,
                                    std::span<const double> targets, double kappa = 1.0);

/// Allocation-free variant used by the critic update; writes the gradient
/// into `gradient` (same length as `predicted`) and returns the loss.
double huber_quantile_loss_into(std::span<const double> predicted,
                                std::span<const double> targets, double kappa,
                                std::span<double> gradient);

/// Atoms r + gamma * q', order preserved. gamma must lie in [0, 1).
QuantileDistribution bellman_target(double reward, double gamma, const QuantileDistribution& next);

/// Right-continuous CDF of the uniform atom mixture: #{q_i <= z} / N.
double cdf_at(const QuantileDistribution& dist, double z);

/// Lower order statistic at 1-based index ceil(tau_hat_i * M) of the sorted samples.
QuantileDistribution empirical_quantiles(std::span<const double> samples, std::size_t n);

/// Finite-support law: sorted distinct values with probabilities.
struct DiscreteLaw {
  std::vector<double> values;
  std::vector<double> probs;

  std::size_t size() const { return values.size(); }
  double total_probability() const;
  double mean() const;
  double cdf(double z) const;       // P(Z <= z)
  double cdf_left(double z) const;  // P(Z < z)
};

/// Sorts by value and merges entries whose values agree within `merge_tol`
/// (absolute, scaled by max(1,|v|)).
DiscreteLaw make_discrete_law(std::vector<std::pair<double, double>> value_prob,
                              double merge_tol = 1e-12);

/// F^{-1}(tau_hat_i) = inf{z : F(z) >= tau_hat_i} for i = 0..n-1.
QuantileDistribution law_quantiles(const DiscreteLaw& law, std::size_t n);

}  // namespace srm
