#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace srm {

/// Tail mean of the worst alpha-fraction: the floor(alpha M) smallest returns plus a
/// fractional weight on the next order statistic so the tail mass is exactly alpha M.
double empirical_cvar(std::span<const double> returns, double alpha);

/// 100 (raw - random) / (expert - random). Throws DomainError when the references coincide.
double normalized_score(double raw, double random_ref, double expert_ref);

/// Mean over population standard deviation; nullopt when the deviation is zero.
std::optional<double> sharpe(std::span<const double> returns);

/// Largest peak-to-trough fractional decline, as a non-negative fraction.
double max_drawdown(std::span<const double> values);

/// Compounds log-returns into a wealth path starting at 1.
std::vector<double> wealth_path(std::span<const double> log_returns);

struct ScoreReference {
  double random = 0.0;
  double expert = 1.0;
};

/// Reference returns of the trading task (random policy, expert).
constexpr ScoreReference kTradingReference{-6.17, 1.72};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<double> returns;            // one discounted return per evaluation episode
  std::optional<double> sharpe;           // portfolio runs only
  std::optional<double> max_drawdown;     // portfolio runs only
};

struct EvalReport {
  std::string label;
  double cvar_alpha = 0.2;
  std::optional<ScoreReference> reference;
  std::vector<SeedResult> seeds;
  std::vector<std::pair<std::string, double>> extras;  // run-level values (for example exact tabular SRM)

  std::size_t episodes() const;
  double mean() const;
  double cvar() const;
  std::optional<double> score() const;
  double seed_mean(std::size_t k) const;
  double seed_cvar(std::size_t k) const;
  std::optional<double> seed_score(std::size_t k) const;
};

/// CSV with header `metric,seed,value`; per-seed rows carry the seed, pooled rows `all`.
std::string metrics_csv(const EvalReport& report);

/// Lossless JSON form of a report (samples included).
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace srm
