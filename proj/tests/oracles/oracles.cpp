#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace oracle {

namespace {

using srm::RiskSpectrum;
using srm::SpectrumKind;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_quantile(double p) {
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std_normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Distortion g(u) from the closed forms, independent of the library.
double g_direct(const RiskSpectrum& s, double u) {
  const double a = s.alpha();
  switch (s.kind()) {
    case SpectrumKind::Neutral: return u;
    case SpectrumKind::CVaR: return std::min(u, a) / a;
    case SpectrumKind::MeanCVaR: return s.omega() * u + (1.0 - s.omega()) * std::min(u, a) / a;
    case SpectrumKind::Exponential: return (1.0 - std::exp(-a * u)) / (1.0 - std::exp(-a));
    case SpectrumKind::DualPower: return 1.0 - std::pow(1.0 - u, a);
    case SpectrumKind::Wang:
      if (u <= 0.0) return 0.0;
      if (u >= 1.0) return 1.0;
      return std_normal_cdf(std_normal_quantile(u) + a);
    case SpectrumKind::ProportionalHazard: return std::pow(u, 1.0 / a);
  }
  throw std::logic_error("g_direct: unknown spectrum");
}

double phi_direct(const RiskSpectrum& s, double u) {
  const double a = s.alpha();
  switch (s.kind()) {
    case SpectrumKind::Neutral: return 1.0;
    case SpectrumKind::CVaR: return u <= a ? 1.0 / a : 0.0;
    case SpectrumKind::MeanCVaR: return s.omega() + (u <= a ? (1.0 - s.omega()) / a : 0.0);
    case SpectrumKind::Exponential: return a * std::exp(-a * u) / (1.0 - std::exp(-a));
    case SpectrumKind::DualPower: return a * std::pow(1.0 - u, a - 1.0);
    default: throw std::logic_error("phi_direct: unbounded spectrum");
  }
}

struct GaussLegendre {
  std::vector<double> x, w;
  GaussLegendre() {
    const int n = 20;
    for (int i = 1; i <= n; ++i) {
      double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        double p1 = z;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x.push_back(z);
      w.push_back(2.0 / ((1.0 - z * z) * dp * dp));
    }
  }
};

const GaussLegendre& gl() {
  static const GaussLegendre rule;
  return rule;
}

}  // namespace

double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels) {
  if (b <= a) return 0.0;
  const GaussLegendre& r = gl();
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h;
    for (std::size_t i = 0; i < r.x.size(); ++i) total += r.w[i] * f(mid + 0.5 * h * r.x[i]);
  }
  return 0.5 * h * total;
}

// ---------------------------------------------------------------------------

double MixedDistribution::cdf(double z) const {
  double f = 0.0;
  for (const auto& u : uniforms) f += u.w * std::clamp((z - u.a) / (u.b - u.a), 0.0, 1.0);
  for (const auto& a : atoms) f += a.z <= z ? a.w : 0.0;
  return f;
}

double MixedDistribution::cdf_left(double z) const {
  double f = 0.0;
  for (const auto& u : uniforms) f += u.w * std::clamp((z - u.a) / (u.b - u.a), 0.0, 1.0);
  for (const auto& a : atoms) f += a.z < z ? a.w : 0.0;
  return f;
}

namespace {

std::vector<double> knots(const MixedDistribution& d) {
  std::vector<double> k;
  for (const auto& u : d.uniforms) {
    k.push_back(u.a);
    k.push_back(u.b);
  }
  for (const auto& a : d.atoms) k.push_back(a.z);
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

}  // namespace

double MixedDistribution::quantile(double u) const {
  const auto k = knots(*this);
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i > 0 && cdf_left(k[i]) >= u) {
      // F(k[i-1]) < u <= F(k[i]-): u is reached on the linear piece before k[i].
      const double f0 = cdf(k[i - 1]);
      return k[i - 1] + (u - f0) / (cdf_left(k[i]) - f0) * (k[i] - k[i - 1]);
    }
    if (cdf(k[i]) >= u) return k[i];
  }
  return k.back();
}

double MixedDistribution::lower_partial(double q) const {
  // F is linear between knots, so the trapezoid rule is exact piece by piece.
  const auto k = knots(*this);
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < k.size() && k[i] < q; ++i) {
    const double hi = std::min(k[i + 1], q);
    const double f_lo = cdf(k[i]);
    const double f_hi = hi < k[i + 1] ? cdf_left(hi) : cdf_left(k[i + 1]);
    area += 0.5 * (f_lo + f_hi) * (hi - k[i]);
  }
  if (!k.empty() && q > k.back()) area += q - k.back();
  return -area;
}

double MixedDistribution::spectral_risk(const RiskSpectrum& spec) const {
  const auto k = knots(*this);
  auto g = [&](double u) { return g_direct(spec, u); };
  std::vector<double> kinks;
  if (spec.kind() == SpectrumKind::CVaR || spec.kind() == SpectrumKind::MeanCVaR) kinks.push_back(spec.alpha());
  auto int_g = [&](double a, double b) {
    double total = 0.0;
    double lo = a;
    for (double kink : kinks) {
      if (kink > lo && kink < b) {
        total += gauss_legendre(g, lo, kink, 16);
        lo = kink;
      }
    }
    return total + gauss_legendre(g, lo, b, 16);
  };
  double risk = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double ua = cdf_left(k[i]);
    const double ub = cdf(k[i]);
    if (ub > ua) risk += k[i] * (g(ub) - g(ua));  // atom: F^{-1} = k[i] on (ua, ub]
    if (i + 1 == k.size()) break;
    const double la = cdf(k[i]);
    const double lb = cdf_left(k[i + 1]);
    if (lb > la) {
      // F^{-1}(u) = k[i] + (u - la) / dens on (la, lb]; integrate by parts.
      const double dens = (lb - la) / (k[i + 1] - k[i]);
      risk += k[i] * (g(lb) - g(la)) + ((lb - la) * g(lb) - int_g(la, lb)) / dens;
    }
  }
  return risk;
}

double MixedDistribution::mean() const {
  double m = 0.0;
  for (const auto& u : uniforms) m += u.w * 0.5 * (u.a + u.b);
  for (const auto& a : atoms) m += a.w * a.z;
  return m;
}

MixedDistribution random_mixed(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> loc(-5.0, 5.0);
  std::uniform_real_distribution<double> width(0.2, 4.0);
  std::uniform_real_distribution<double> mass(0.2, 1.0);
  std::uniform_int_distribution<int> count(1, 3);
  MixedDistribution d;
  const int nu = count(rng);
  const int na = count(rng);
  double total = 0.0;
  for (int i = 0; i < nu; ++i) {
    const double a = loc(rng);
    d.uniforms.push_back({a, a + width(rng), mass(rng)});
    total += d.uniforms.back().w;
  }
  for (int i = 0; i < na; ++i) {
    d.atoms.push_back({loc(rng), mass(rng)});
    total += d.atoms.back().w;
  }
  for (auto& u : d.uniforms) u.w /= total;
  for (auto& a : d.atoms) a.w /= total;
  return d;
}

// ---------------------------------------------------------------------------

double h_direct(const std::vector<double>& q, const std::vector<double>& w, double z) {
  const std::size_t n = q.size();
  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double tau_hat = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n));
    v += w[i] * (q[i] + std::min(z - q[i], 0.0) / tau_hat);
  }
  return v;
}

std::vector<double> h_weights_direct(const RiskSpectrum& spec, std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double nd = static_cast<double>(n);
    const double tau_hat = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * nd);
    const double prev = phi_direct(spec, static_cast<double>(i) / nd);
    const double next = i + 1 == n ? 0.0 : phi_direct(spec, static_cast<double>(i + 1) / nd);
    w[i] = tau_hat * (prev - next);
  }
  return w;
}

std::vector<double> central_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = f(x);
    x[i] = keep - step;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

std::vector<double> one_sided_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double step) {
  const double base = f(x);
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    g[i] = (f(x) - base) / step;
    x[i] = keep;
  }
  return g;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b, double floor) {
  double diff = 0.0;
  double scale = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

// ---------------------------------------------------------------------------

DecisionKey key_of(std::size_t t, std::size_t x, double s) { return {t, x, std::llround(s * 1e9)}; }

namespace {

template <class Visit>
void walk(const srm::TabularMdp& mdp, std::size_t t, std::size_t x, double s, double c, double p,
          const PathPolicy* policy, Visit&& visit_leaf, std::set<DecisionKey>* points) {
  const DecisionKey key = key_of(t, x, s);
  if (points) points->insert(key);
  std::vector<double> pi;
  if (policy) pi = (*policy)(key);
  for (std::size_t a = 0; a < mdp.num_actions; ++a) {
    const double pa = policy ? pi[a] : 1.0;
    if (pa == 0.0) continue;
    for (const auto& r : mdp.rewards[x * mdp.num_actions + a]) {
      if (r.prob == 0.0) continue;
      const double s2 = s + c * r.value;
      if (t + 1 >= mdp.horizon) {
        visit_leaf(s2, p * pa * r.prob);
        continue;
      }
      for (std::size_t y = 0; y < mdp.num_states; ++y) {
        const double py = mdp.transitions[(x * mdp.num_actions + a) * mdp.num_states + y];
        if (py == 0.0) continue;
        walk(mdp, t + 1, y, s2, c * mdp.gamma, p * pa * r.prob * py, policy, visit_leaf, points);
      }
    }
  }
}

}  // namespace

std::vector<DecisionKey> decision_points(const srm::TabularMdp& mdp) {
  std::set<DecisionKey> points;
  for (std::size_t x = 0; x < mdp.num_states; ++x) {
    if (mdp.xi0[x] > 0.0) walk(mdp, 0, x, 0.0, 1.0, mdp.xi0[x], nullptr, [](double, double) {}, &points);
  }
  return {points.begin(), points.end()};
}

std::vector<std::pair<double, double>> return_law(const srm::TabularMdp& mdp, const PathPolicy& policy) {
  std::vector<std::pair<double, double>> law;
  for (std::size_t x = 0; x < mdp.num_states; ++x) {
    if (mdp.xi0[x] > 0.0) {
      walk(mdp, 0, x, 0.0, 1.0, mdp.xi0[x], &policy, [&](double g, double p) { law.emplace_back(g, p); }, nullptr);
    }
  }
  return law;
}

double j_value(const srm::TabularMdp& mdp, const PathPolicy& policy, const std::vector<double>& q,
               const std::vector<double>& w) {
  double j = 0.0;
  for (const auto& [g, p] : return_law(mdp, policy)) j += p * h_direct(q, w, g);
  return j;
}

double best_deterministic_j(const srm::TabularMdp& mdp, const std::vector<double>& q, const std::vector<double>& w) {
  const auto points = decision_points(mdp);
  const std::size_t a = mdp.num_actions;
  double total = 1.0;
  for (std::size_t i = 0; i < points.size(); ++i) total *= static_cast<double>(a);
  if (total > 1e6) throw std::length_error("best_deterministic_j: too many policies");
  std::map<DecisionKey, std::size_t> index;
  for (std::size_t i = 0; i < points.size(); ++i) index[points[i]] = i;
  std::vector<std::size_t> choice(points.size(), 0);
  double best = -1e300;
  for (std::size_t code = 0; code < static_cast<std::size_t>(total); ++code) {
    std::size_t c = code;
    for (auto& ch : choice) {
      ch = c % a;
      c /= a;
    }
    const PathPolicy pol = [&](const DecisionKey& k) {
      std::vector<double> p(a, 0.0);
      p[choice[index.at(k)]] = 1.0;
      return p;
    };
    best = std::max(best, j_value(mdp, pol, q, w));
  }
  return best;
}

double law_cdf(const std::vector<std::pair<double, double>>& law, double z, bool strict) {
  double f = 0.0;
  for (const auto& [g, p] : law) {
    if (strict ? g < z : g <= z) f += p;
  }
  return f;
}

double law_srm(const RiskSpectrum& spec, std::vector<std::pair<double, double>> law) {
  std::sort(law.begin(), law.end());
  double f = 0.0;
  double risk = 0.0;
  for (const auto& [g, p] : law) {
    const double f2 = std::min(1.0, f + p);
    risk += g * (g_direct(spec, f2) - g_direct(spec, f));
    f = f2;
  }
  return risk;
}

}  // namespace oracle
