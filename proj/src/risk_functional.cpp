#include "srm/risk_functional.hpp"

#include <algorithm>
#include <cmath>

#include "srm/errors.hpp"

namespace srm {

PiecewiseLinearH::PiecewiseLinearH(std::vector<double> breakpoints, std::vector<double> weights,
                                   RiskSpectrum spectrum)
    : breakpoints_(std::move(breakpoints)), weights_(std::move(weights)), spectrum_(spectrum) {
  const std::size_t n = breakpoints_.size();
  if (weights_.size() != n) throw InternalError("PiecewiseLinearH: breakpoint/weight size mismatch");
  if (!std::is_sorted(breakpoints_.begin(), breakpoints_.end())) {
    throw InputError("PiecewiseLinearH: breakpoints must be non-decreasing");
  }
  suffix_slope_.assign(n + 1, 0.0);
  suffix_icpt_.assign(n + 1, 0.0);
  top_ = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double rate = weights_[k] / level(k);
    suffix_slope_[k] = suffix_slope_[k + 1] + rate;
    suffix_icpt_[k] = suffix_icpt_[k + 1] + rate * breakpoints_[k];
    top_ += weights_[k] * breakpoints_[k];
  }
}

std::size_t PiecewiseLinearH::first_above(double z) const {
  return static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), z) -
                                  breakpoints_.begin());
}

double PiecewiseLinearH::value(double z) const {
  const std::size_t k = first_above(z);
  return top_ + z * suffix_slope_[k] - suffix_icpt_[k];
}

double PiecewiseLinearH::slope(double z) const { return suffix_slope_[first_above(z)]; }

std::vector<double> spectrum_grid(const RiskSpectrum& spec, std::size_t n) {
  std::vector<double> grid(n + 1);
  for (std::size_t i = 0; i < n; ++i) grid[i] = spec.phi(QuantileDistribution::tau(i, n));
  grid[n] = 0.0;
  // phi(0) is infinite here; use the mean of phi over [0, tau_hat_0], the only cell where it acts.
  if (!spec.bounded()) grid[0] = 2.0 * static_cast<double>(n) * spec.cumulative(0.5 / static_cast<double>(n));
  return grid;
}

PiecewiseLinearH build_h(const RiskSpectrum& spec, const QuantileDistribution& dist) {
  const QuantileDistribution sorted = dist.canonical();
  const std::size_t n = sorted.size();
  const std::vector<double> grid = spectrum_grid(spec, n);
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    // clamp rounding noise of nearly flat spectra; phi is non-increasing
    weights[i] = QuantileDistribution::tau_hat(i, n) * std::max(0.0, grid[i] - grid[i + 1]);
  }
  std::vector<double> atoms(sorted.atoms().begin(), sorted.atoms().end());
  return PiecewiseLinearH(std::move(atoms), std::move(weights), spec);
}

double expect_h(const PiecewiseLinearH& h, std::span<const double> atoms) {
  double total = 0.0;
  for (double q : atoms) total += h.value(q);
  return total / static_cast<double>(atoms.size());
}

double expect_h(const PiecewiseLinearH& h, const QuantileDistribution& dist) {
  return expect_h(h, dist.atoms());
}

double q_value(const PiecewiseLinearH& h, double s, double c, std::span<const double> atoms) {
  if (!(c > 0.0)) throw DomainError("q_value: discount product c must be positive");
  double total = 0.0;
  for (double q : atoms) total += h.value(s + c * q);
  return total / (c * static_cast<double>(atoms.size()));
}

double q_value(const PiecewiseLinearH& h, double s, double c, const QuantileDistribution& dist) {
  return q_value(h, s, c, dist.atoms());
}

double q_value_with_grad(const PiecewiseLinearH& h, double s, double c,
                         std::span<const double> atoms, std::span<double> grad) {
  if (!(c > 0.0)) throw DomainError("q_value: discount product c must be positive");
  if (grad.size() != atoms.size()) throw InternalError("q_value_with_grad: gradient size mismatch");
  const double inv_n = 1.0 / static_cast<double>(atoms.size());
  double total = 0.0;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    const double z = s + c * atoms[j];
    total += h.value(z);
    grad[j] = h.slope(z) * inv_n;
  }
  return total * inv_n / c;
}

}  // namespace srm
