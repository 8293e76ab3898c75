#pragma once

#include <string>
#include <string_view>

#include "srm/quantile_dist.hpp"

namespace srm {

enum class SpectrumKind { Neutral, CVaR, MeanCVaR, Exponential, DualPower, Wang, ProportionalHazard };

/// A risk spectrum phi on [0,1]: non-negative, non-increasing, integrating to one.
///
/// Parameters are validated at construction; evaluation never throws.
/// phi is left-continuous, so CVaR(a) has phi(a) = 1/a and phi(u) = 0 for u > a.
/// Wang (a > 0) and proportional hazard (a > 1) are unbounded at u = 0.
class RiskSpectrum {
 public:
  static constexpr double kMinLevel = 1e-6;

  RiskSpectrum() = default;  // risk neutral

  static RiskSpectrum neutral();
  static RiskSpectrum cvar(double alpha);
  static RiskSpectrum mean_cvar(double alpha, double omega);
  static RiskSpectrum exponential(double alpha);
  static RiskSpectrum dual_power(double alpha);
  static RiskSpectrum wang(double alpha);
  static RiskSpectrum proportional_hazard(double alpha);

  /// Parses `cvar:0.2`, `mc:0.2,0.4`, `exp:2.0`, `dp:2.0`, `wang:0.5`, `ph:2.0`, `neutral`.
  static RiskSpectrum parse(std::string_view text);
  std::string to_string() const;

  SpectrumKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double omega() const { return omega_; }

  double phi(double u) const;
  /// g(u) = integral of phi over [0, u], in closed form.
  double cumulative(double u) const;
  bool bounded() const;

  friend bool operator==(const RiskSpectrum&, const RiskSpectrum&) = default;

 private:
  RiskSpectrum(SpectrumKind kind, double alpha, double omega);

  SpectrumKind kind_ = SpectrumKind::Neutral;
  double alpha_ = 1.0;
  double omega_ = 0.0;
};

inline double phi(const RiskSpectrum& spec, double u) { return spec.phi(u); }
inline double cumulative_phi(const RiskSpectrum& spec, double u) { return spec.cumulative(u); }

/// Exact SRM of the N-atom distribution whose inverse CDF is q_i on (tau_{i-1}, tau_i].
/// Unsorted atoms are sorted first.
double srm_of_quantiles(const RiskSpectrum& spec, const QuantileDistribution& dist);

/// Exact SRM of a finite-support law.
double srm_of_law(const RiskSpectrum& spec, const DiscreteLaw& law);

double normal_cdf(double x);
/// Standard-normal quantile; |normal_cdf(result) - p| <= 1e-9. Throws DomainError outside (0,1).
double inverse_normal_cdf(double p);

}  // namespace srm
