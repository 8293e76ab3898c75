#include "srm/risk_spectra.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "srm/errors.hpp"

namespace srm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_param(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

void check_level(double alpha, const char* name) {
  require(std::isfinite(alpha) && alpha >= RiskSpectrum::kMinLevel && alpha <= 1.0,
          std::string(name) + ": alpha must lie in [1e-6, 1], got " + format_param(alpha));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view token, std::string_view whole) {
  token = trim(token);
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (token.empty() || ec != std::errc() || ptr != last) {
    throw ParameterError("spectrum '" + std::string(whole) + "': bad number token '" +
                         std::string(token) + "'");
  }
  return value;
}

}  // namespace

RiskSpectrum::RiskSpectrum(SpectrumKind kind, double alpha, double omega)
    : kind_(kind), alpha_(alpha), omega_(omega) {}

RiskSpectrum RiskSpectrum::neutral() { return {}; }

RiskSpectrum RiskSpectrum::cvar(double alpha) {
  check_level(alpha, "cvar");
  return RiskSpectrum(SpectrumKind::CVaR, alpha, 0.0);
}

RiskSpectrum RiskSpectrum::mean_cvar(double alpha, double omega) {
  check_level(alpha, "mean-cvar");
  require(std::isfinite(omega) && omega >= 0.0 && omega <= 1.0,
          "mean-cvar: omega must lie in [0, 1], got " + format_param(omega));
  return RiskSpectrum(SpectrumKind::MeanCVaR, alpha, omega);
}

RiskSpectrum RiskSpectrum::exponential(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0,
          "exponential: alpha must be positive, got " + format_param(alpha));
  return RiskSpectrum(SpectrumKind::Exponential, alpha, 0.0);
}

RiskSpectrum RiskSpectrum::dual_power(double alpha) {
  require(std::isfinite(alpha) && alpha >= 1.0,
          "dual-power: alpha must be >= 1, got " + format_param(alpha));
  return RiskSpectrum(SpectrumKind::DualPower, alpha, 0.0);
}

RiskSpectrum RiskSpectrum::wang(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0,
          "wang: alpha must be positive, got " + format_param(alpha));
  return RiskSpectrum(SpectrumKind::Wang, alpha, 0.0);
}

RiskSpectrum RiskSpectrum::proportional_hazard(double alpha) {
  require(std::isfinite(alpha) && alpha >= 1.0,
          "proportional-hazard: alpha must be >= 1, got " + format_param(alpha));
  return RiskSpectrum(SpectrumKind::ProportionalHazard, alpha, 0.0);
}

RiskSpectrum RiskSpectrum::parse(std::string_view text) {
  const std::string_view whole = trim(text);
  const auto colon = whole.find(':');
  const std::string_view name = trim(whole.substr(0, colon));
  std::vector<double> params;
  if (colon != std::string_view::npos) {
    std::string_view rest = whole.substr(colon + 1);
    while (true) {
      const auto comma = rest.find(',');
      params.push_back(parse_number(rest.substr(0, comma), whole));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  auto expect = [&](std::size_t count) {
    if (params.size() != count) {
      throw ParameterError("spectrum '" + std::string(whole) + "': '" + std::string(name) +
                           "' takes " + std::to_string(count) + " parameter(s), got " +
                           std::to_string(params.size()));
    }
  };
  if (name == "neutral") {
    expect(0);
    return neutral();
  }
  if (name == "cvar") {
    expect(1);
    return cvar(params[0]);
  }
  if (name == "mc") {
    expect(2);
    return mean_cvar(params[0], params[1]);
  }
  if (name == "exp") {
    expect(1);
    return exponential(params[0]);
  }
  if (name == "dp") {
    expect(1);
    return dual_power(params[0]);
  }
  if (name == "wang") {
    expect(1);
    return wang(params[0]);
  }
  if (name == "ph") {
    expect(1);
    return proportional_hazard(params[0]);
  }
  throw ParameterError("spectrum '" + std::string(whole) + "': unknown spectrum token '" +
                       std::string(name) + "'");
}

std::string RiskSpectrum::to_string() const {
  switch (kind_) {
    case SpectrumKind::Neutral: return "neutral";
    case SpectrumKind::CVaR: return "cvar:" + format_param(alpha_);
    case SpectrumKind::MeanCVaR: return "mc:" + format_param(alpha_) + "," + format_param(omega_);
    case SpectrumKind::Exponential: return "exp:" + format_param(alpha_);
    case SpectrumKind::DualPower: return "dp:" + format_param(alpha_);
    case SpectrumKind::Wang: return "wang:" + format_param(alpha_);
    case SpectrumKind::ProportionalHazard: return "ph:" + format_param(alpha_);
  }
  return "neutral";
}

bool RiskSpectrum::bounded() const {
  switch (kind_) {
    case SpectrumKind::Wang: return false;
    case SpectrumKind::ProportionalHazard: return alpha_ == 1.0;
    default: return true;
  }
}

double RiskSpectrum::phi(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  switch (kind_) {
    case SpectrumKind::Neutral: return 1.0;
    case SpectrumKind::CVaR: return u <= alpha_ ? 1.0 / alpha_ : 0.0;
    case SpectrumKind::MeanCVaR: return omega_ + (u <= alpha_ ? (1.0 - omega_) / alpha_ : 0.0);
    case SpectrumKind::Exponential:
      return alpha_ * std::exp(-alpha_ * u) / -std::expm1(-alpha_);
    case SpectrumKind::DualPower: return alpha_ * std::pow(1.0 - u, alpha_ - 1.0);
    case SpectrumKind::Wang:
      if (u <= 0.0) return kInf;
      if (u >= 1.0) return 0.0;
      return std::exp(-alpha_ * inverse_normal_cdf(u) - 0.5 * alpha_ * alpha_);
    case SpectrumKind::ProportionalHazard:
      if (alpha_ == 1.0) return 1.0;
      if (u <= 0.0) return kInf;
      return std::pow(u, 1.0 / alpha_ - 1.0) / alpha_;
  }
  return 1.0;
}

double RiskSpectrum::cumulative(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  switch (kind_) {
    case SpectrumKind::Neutral: return u;
    case SpectrumKind::CVaR: return std::min(u, alpha_) / alpha_;
    case SpectrumKind::MeanCVaR: return omega_ * u + (1.0 - omega_) * std::min(u, alpha_) / alpha_;
    case SpectrumKind::Exponential: return std::expm1(-alpha_ * u) / std::expm1(-alpha_);
    case SpectrumKind::DualPower: return 1.0 - std::pow(1.0 - u, alpha_);
    case SpectrumKind::Wang: return normal_cdf(inverse_normal_cdf(u) + alpha_);
    case SpectrumKind::ProportionalHazard: return std::pow(u, 1.0 / alpha_);
  }
  return u;
}

double srm_of_quantiles(const RiskSpectrum& spec, const QuantileDistribution& dist) {
  const QuantileDistribution sorted = dist.canonical();
  const std::size_t n = sorted.size();
  double total = 0.0;
  double g_prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g_next = spec.cumulative(QuantileDistribution::tau(i + 1, n));
    total += sorted[i] * (g_next - g_prev);
    g_prev = g_next;
  }
  return total;
}

double srm_of_law(const RiskSpectrum& spec, const DiscreteLaw& law) {
  double total = 0.0;
  double cum = 0.0;
  double g_prev = 0.0;
  for (std::size_t k = 0; k < law.size(); ++k) {
    cum += law.probs[k];
    const double g_next = k + 1 == law.size() ? 1.0 : spec.cumulative(cum);
    total += law.values[k] * (g_next - g_prev);
    g_prev = g_next;
  }
  return total;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("inverse_normal_cdf: p must lie in (0, 1)");

  // Acklam's rational approximation (relative error ~1.2e-9) ...
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x = 0.0;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // ... plus one Halley step against the erfc-based CDF.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace srm
