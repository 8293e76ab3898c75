#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "srm/environments.hpp"
#include "srm/transition.hpp"

namespace srm {

/// Maps an extended state to an action; draws from `rng` when stochastic.
using PolicyFn = std::function<std::vector<double>(const ExtendedState&, Rng&)>;

struct DatasetMeta {
  std::string env;
  double gamma = 0.99;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::string policy;  // generator tag
  std::uint64_t seed = 0;
  std::size_t records = 0;

  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

struct TransitionDataset {
  DatasetMeta meta;
  std::vector<TransitionRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  friend bool operator==(const TransitionDataset&, const TransitionDataset&) = default;
};

/// Rolls `policy` for exactly `total_steps` transitions over whole episodes.
/// The last episode is cut short with done=true when the budget runs out.
TransitionDataset generate_dataset(const Environment& env, double gamma, const PolicyFn& policy,
                                   std::size_t total_steps, std::uint64_t seed,
                                   const std::string& policy_tag);

/// Uniform draws with replacement. Throws InputError on an empty dataset.
std::vector<const TransitionRecord*> sample_batch(const TransitionDataset& dataset, std::size_t m,
                                                  Rng& rng);

/// Checks metadata against records and replays s' = s + c r, c' = gamma c within each
/// episode. Throws DatasetError(Consistency) naming the first offending record.
void validate_dataset(const TransitionDataset& dataset, double tol = 1e-12);

/// `.csv` paths write CSV rows plus a `<stem>.meta.json` sidecar; any other path
/// writes one file: a JSON metadata line followed by the CSV rows.
void save_dataset(const TransitionDataset& dataset, const std::string& path);
/// Inverse of save_dataset. DatasetError kinds: Format (unparseable), Version
/// (unknown version tag), Truncated (short row or missing rows at end of file),
/// Consistency (metadata disagrees with the records).
TransitionDataset load_dataset(const std::string& path);

/// Sidecar path used for `.csv` datasets.
std::string sidecar_path(const std::string& csv_path);

constexpr int kDatasetVersion = 1;

}  // namespace srm
