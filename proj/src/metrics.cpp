#include "srm/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "srm/errors.hpp"

namespace srm {

using nlohmann::json;

double empirical_cvar(std::span<const double> returns, double alpha) {
  if (returns.empty()) throw InputError("empirical_cvar: no returns");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("empirical_cvar: alpha must lie in (0, 1]");
  std::vector<double> sorted(returns.begin(), returns.end());
  std::sort(sorted.begin(), sorted.end());
  const double mass = alpha * static_cast<double>(sorted.size());
  const auto whole = std::min(static_cast<std::size_t>(std::floor(mass)), sorted.size());
  double sum = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(whole), 0.0);
  const double frac = mass - static_cast<double>(whole);
  if (frac > 0.0 && whole < sorted.size()) sum += frac * sorted[whole];
  return sum / mass;
}

double normalized_score(double raw, double random_ref, double expert_ref) {
  if (expert_ref == random_ref) throw DomainError("normalized_score: expert and random references coincide");
  return 100.0 * ((raw - random_ref) / (expert_ref - random_ref));  // ratio first: exact at both references
}

std::optional<double> sharpe(std::span<const double> returns) {
  if (returns.size() < 2) throw InputError("sharpe: need at least two returns");
  const double n = static_cast<double>(returns.size());
  const double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / n;
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  if (!(sd > 1e-15 * std::max(1.0, std::abs(mean)))) return std::nullopt;
  return mean / sd;
}

double max_drawdown(std::span<const double> values) {
  double peak = 0.0;
  double worst = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw InputError("max_drawdown: values must be positive");
    peak = std::max(peak, v);
    worst = std::max(worst, (peak - v) / peak);
  }
  return worst;
}

std::vector<double> wealth_path(std::span<const double> log_returns) {
  std::vector<double> out{1.0};
  double log_wealth = 0.0;
  for (double r : log_returns) {
    log_wealth += r;
    out.push_back(std::exp(log_wealth));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t EvalReport::episodes() const {
  std::size_t n = 0;
  for (const auto& s : seeds) n += s.returns.size();
  return n;
}

namespace {

std::vector<double> pooled(const EvalReport& r) {
  std::vector<double> all;
  for (const auto& s : r.seeds) all.insert(all.end(), s.returns.begin(), s.returns.end());
  if (all.empty()) throw InputError("report holds no returns");
  return all;
}

double mean_of(std::span<const double> v) {
  if (v.empty()) throw InputError("report holds no returns");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double EvalReport::mean() const { return mean_of(pooled(*this)); }
double EvalReport::cvar() const { return empirical_cvar(pooled(*this), cvar_alpha); }
std::optional<double> EvalReport::score() const {
  if (!reference) return std::nullopt;
  return normalized_score(mean(), reference->random, reference->expert);
}
double EvalReport::seed_mean(std::size_t k) const { return mean_of(seeds.at(k).returns); }
double EvalReport::seed_cvar(std::size_t k) const { return empirical_cvar(seeds.at(k).returns, cvar_alpha); }
std::optional<double> EvalReport::seed_score(std::size_t k) const {
  if (!reference) return std::nullopt;
  return normalized_score(seed_mean(k), reference->random, reference->expert);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string metrics_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "metric,seed,value\n";
  const std::string cvar_name = "cvar_" + format_double(r.cvar_alpha);
  auto row = [&](const std::string& metric, const std::string& seed, double v) {
    out << metric << ',' << seed << ',' << format_double(v) << '\n';
  };
  for (std::size_t k = 0; k < r.seeds.size(); ++k) {
    const std::string seed = std::to_string(r.seeds[k].seed);
    row("episodes", seed, static_cast<double>(r.seeds[k].returns.size()));
    row("mean_return", seed, r.seed_mean(k));
    row(cvar_name, seed, r.seed_cvar(k));
    if (auto s = r.seed_score(k)) row("normalized_score", seed, *s);
    if (r.seeds[k].sharpe) row("sharpe", seed, *r.seeds[k].sharpe);
    if (r.seeds[k].max_drawdown) row("max_drawdown", seed, *r.seeds[k].max_drawdown);
  }
  row("episodes", "all", static_cast<double>(r.episodes()));
  row("mean_return", "all", r.mean());
  row(cvar_name, "all", r.cvar());
  if (auto s = r.score()) row("normalized_score", "all", *s);
  for (const auto& [name, v] : r.extras) row(name, "all", v);
  return out.str();
}

std::string report_to_json(const EvalReport& r) {
  json j;
  j["label"] = r.label;
  j["cvar_alpha"] = r.cvar_alpha;
  if (r.reference) j["reference"] = {{"random", r.reference->random}, {"expert", r.reference->expert}};
  j["seeds"] = json::array();
  for (const auto& s : r.seeds) {
    json e = {{"seed", s.seed}, {"returns", s.returns}};
    if (s.sharpe) e["sharpe"] = *s.sharpe;
    if (s.max_drawdown) e["max_drawdown"] = *s.max_drawdown;
    j["seeds"].push_back(std::move(e));
  }
  j["extras"] = json::array();
  for (const auto& [name, v] : r.extras) j["extras"].push_back({name, v});
  return j.dump(2);
}

EvalReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.label = j.at("label");
    r.cvar_alpha = j.at("cvar_alpha");
    if (j.contains("reference")) r.reference = ScoreReference{j["reference"].at("random"), j["reference"].at("expert")};
    for (const auto& e : j.at("seeds")) {
      SeedResult s;
      s.seed = e.at("seed");
      s.returns = e.at("returns").get<std::vector<double>>();
      if (e.contains("sharpe")) s.sharpe = e["sharpe"].get<double>();
      if (e.contains("max_drawdown")) s.max_drawdown = e["max_drawdown"].get<double>();
      r.seeds.push_back(std::move(s));
    }
    if (j.contains("extras")) {
      for (const auto& e : j["extras"]) r.extras.emplace_back(e.at(0).get<std::string>(), e.at(1).get<double>());
    }
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("report: ") + e.what());
  }
}

}  // namespace srm
