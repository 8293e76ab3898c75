#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "srm/quantile_dist.hpp"
#include "srm/risk_spectra.hpp"

namespace srm {

/// Concave piecewise-linear h(z) = sum_i w_i (q_i + (z - q_i)^- / tau_hat_i).
///
/// Breakpoints are non-decreasing; weights are non-negative. Evaluation is
/// O(log N) through suffix sums of w_i / tau_hat_i and w_i q_i / tau_hat_i.
class PiecewiseLinearH {
 public:
  PiecewiseLinearH() = default;
  PiecewiseLinearH(std::vector<double> breakpoints, std::vector<double> weights,
                   RiskSpectrum spectrum);

  std::size_t size() const { return breakpoints_.size(); }
  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const double> weights() const { return weights_; }
  double level(std::size_t i) const { return QuantileDistribution::tau_hat(i, size()); }
  const RiskSpectrum& spectrum() const { return spectrum_; }

  double value(double z) const;
  /// Right derivative: sum of w_i / tau_hat_i over breakpoints strictly above z.
  double slope(double z) const;
  /// Total left slope sum_i w_i / tau_hat_i (equals phi(0) on bounded spectra).
  double max_slope() const { return suffix_slope_.empty() ? 0.0 : suffix_slope_.front(); }

 private:
  std::size_t first_above(double z) const;

  std::vector<double> breakpoints_;
  std::vector<double> weights_;
  RiskSpectrum spectrum_;
  double top_ = 0.0;                  // sum_i w_i q_i
  std::vector<double> suffix_slope_{0.0};  // size N+1, suffix_slope_[N] = 0
  std::vector<double> suffix_icpt_{0.0};   // size N+1
};

/// phi at tau_0..tau_N with phi(tau_N) := 0. On unbounded spectra phi(tau_0)
/// is replaced by the mean 2N g(1/(2N)) over [0, tau_hat_0].
std::vector<double> spectrum_grid(const RiskSpectrum& spec, std::size_t n);

/// Weights w_i = tau_hat_i (phi(tau_{i-1}) - phi(tau_i)) over the breakpoints of `dist`.
/// Non-canonical input is sorted.
PiecewiseLinearH build_h(const RiskSpectrum& spec, const QuantileDistribution& dist);

inline double eval_h(const PiecewiseLinearH& h, double z) { return h.value(z); }
inline double h_slope(const PiecewiseLinearH& h, double z) { return h.slope(z); }

/// (1/N) sum_j h(q_j).
double expect_h(const PiecewiseLinearH& h, const QuantileDistribution& dist);
double expect_h(const PiecewiseLinearH& h, std::span<const double> atoms);

/// E[h(s + c Z)] / c over the atoms of Z. Throws DomainError for c <= 0.
double q_value(const PiecewiseLinearH& h, double s, double c, std::span<const double> atoms);
double q_value(const PiecewiseLinearH& h, double s, double c, const QuantileDistribution& dist);

/// q_value plus its gradient with respect to each atom: h'(s + c q_j) / N.
double q_value_with_grad(const PiecewiseLinearH& h, double s, double c,
                         std::span<const double> atoms, std::span<double> grad);

/// Per-state risk functional of the iterative-risk baseline.
inline double iterative_risk_q(const RiskSpectrum& spec, const QuantileDistribution& dist) {
  return srm_of_quantiles(spec, dist);
}

}  // namespace srm
