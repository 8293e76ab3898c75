#include "srm/offline_data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "srm/errors.hpp"

namespace srm {

using nlohmann::json;

TransitionDataset generate_dataset(const Environment& env, double gamma, const PolicyFn& policy,
                                   std::size_t total_steps, std::uint64_t seed,
                                   const std::string& policy_tag) {
  TransitionDataset data;
  const ActionSpace space = env.action_space();
  data.meta = {env.name(), gamma, env.observation_dim(), space.dim(), policy_tag, seed, 0};
  data.records.reserve(total_steps);
  ExtendedEnvironment ext(env.clone(), gamma);
  Rng rng(seed);
  std::size_t episode = 0;
  while (data.records.size() < total_steps) {
    ExtendedState x = ext.reset(rng);
    for (std::size_t t = 0; data.records.size() < total_steps; ++t) {
      std::vector<double> action = policy(x, rng);
      if (action.size() != space.dim()) {
        throw InputError("generate_dataset: policy returned " + std::to_string(action.size()) +
                         " action values, environment expects " + std::to_string(space.dim()));
      }
      ExtendedStep step = ext.step(action, rng);
      TransitionRecord r;
      r.episode = episode;
      r.t = t;
      r.state = x.base;
      r.s = x.s;
      r.c = x.c;
      r.action = std::move(action);
      r.reward = step.reward;
      r.next_state = step.next.base;
      r.next_s = step.next.s;
      r.next_c = step.next.c;
      r.done = step.done || data.records.size() + 1 == total_steps;
      data.records.push_back(std::move(r));
      if (step.done) break;
      x = std::move(step.next);
    }
    ++episode;
  }
  data.meta.records = data.records.size();
  return data;
}

std::vector<const TransitionRecord*> sample_batch(const TransitionDataset& dataset, std::size_t m,
                                                  Rng& rng) {
  if (dataset.empty()) throw InputError("sample_batch: dataset is empty");
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::vector<const TransitionRecord*> out(m);
  for (auto& p : out) p = &dataset.records[pick(rng)];
  return out;
}

namespace {

[[noreturn]] void inconsistent(const std::string& msg) {
  throw DatasetError(DatasetError::Kind::Consistency, "dataset: " + msg);
}

}  // namespace

void validate_dataset(const TransitionDataset& dataset, double tol) {
  const DatasetMeta& m = dataset.meta;
  if (m.records != dataset.size()) {
    inconsistent("record count mismatch: metadata says " + std::to_string(m.records) + ", found " +
                 std::to_string(dataset.size()));
  }
  const double g = m.gamma;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const TransitionRecord& r = dataset.records[i];
    const std::string where = "record " + std::to_string(i) + " (episode " + std::to_string(r.episode) +
                              ", t " + std::to_string(r.t) + ")";
    if (r.state.size() != m.state_dim || r.next_state.size() != m.state_dim) {
      inconsistent(where + ": state has " + std::to_string(r.state.size()) + " values, metadata says " +
                   std::to_string(m.state_dim));
    }
    if (r.action.size() != m.action_dim) {
      inconsistent(where + ": action has " + std::to_string(r.action.size()) + " values, metadata says " +
                   std::to_string(m.action_dim));
    }
    if (std::abs(r.next_s - (r.s + r.c * r.reward)) > tol || std::abs(r.next_c - g * r.c) > tol) {
      inconsistent(where + ": next (s, c) does not follow s + c r, gamma c");
    }
    const bool first = i == 0 || dataset.records[i - 1].episode != r.episode;
    if (first) {
      if (r.t != 0 || std::abs(r.s) > tol || std::abs(r.c - 1.0) > tol) {
        inconsistent(where + ": episode does not start at t = 0 with s = 0, c = 1");
      }
    } else {
      const TransitionRecord& p = dataset.records[i - 1];
      if (p.done) inconsistent(where + ": record follows a done record in the same episode");
      if (r.t != p.t + 1 || std::abs(r.s - p.next_s) > tol || std::abs(r.c - p.next_c) > tol) {
        inconsistent(where + ": (t, s, c) does not continue the previous record");
      }
    }
    const bool last = i + 1 == dataset.size() || dataset.records[i + 1].episode != r.episode;
    if (last && !r.done) inconsistent(where + ": last record of an episode is not marked done");
  }
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string header_line(const DatasetMeta& m) {
  std::string h = "episode,t";
  for (std::size_t i = 0; i < m.state_dim; ++i) h += ",state_" + std::to_string(i);
  h += ",s,c";
  for (std::size_t i = 0; i < m.action_dim; ++i) h += ",action_" + std::to_string(i);
  h += ",reward";
  for (std::size_t i = 0; i < m.state_dim; ++i) h += ",next_state_" + std::to_string(i);
  h += ",next_s,next_c,done";
  return h;
}

json meta_json(const DatasetMeta& m) {
  return {{"format", "srm-dataset"}, {"version", kDatasetVersion}, {"env", m.env},
          {"gamma", m.gamma},        {"state_dim", m.state_dim},   {"action_dim", m.action_dim},
          {"policy", m.policy},      {"seed", m.seed},             {"records", m.records}};
}

DatasetMeta parse_meta(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DatasetError(DatasetError::Kind::Format, source + ": metadata is not valid JSON: " + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != "srm-dataset") {
      throw DatasetError(DatasetError::Kind::Format, source + ": metadata lacks format \"srm-dataset\"");
    }
    const json& v = j.at("version");
    if (!v.is_number_integer() || v.get<int>() != kDatasetVersion) {
      throw DatasetError(DatasetError::Kind::Version, source + ": unsupported dataset version " + v.dump() +
                                                          " (expected " + std::to_string(kDatasetVersion) + ")");
    }
    DatasetMeta m;
    m.env = j.at("env");
    m.gamma = j.at("gamma");
    m.state_dim = j.at("state_dim");
    m.action_dim = j.at("action_dim");
    m.policy = j.at("policy");
    m.seed = j.at("seed");
    m.records = j.at("records");
    return m;
  } catch (const json::exception& e) {
    throw DatasetError(DatasetError::Kind::Format, source + ": bad metadata field: " + e.what());
  }
}

void write_rows(std::ostream& out, const DatasetMeta& meta, const std::vector<TransitionRecord>& records) {
  out << header_line(meta) << '\n';
  for (const TransitionRecord& r : records) {
    out << r.episode << ',' << r.t;
    for (double v : r.state) out << ',' << fmt(v);
    out << ',' << fmt(r.s) << ',' << fmt(r.c);
    for (double v : r.action) out << ',' << fmt(v);
    out << ',' << fmt(r.reward);
    for (double v : r.next_state) out << ',' << fmt(v);
    out << ',' << fmt(r.next_s) << ',' << fmt(r.next_c) << ',' << (r.done ? 1 : 0) << '\n';
  }
}

class RowParser {
 public:
  RowParser(const std::string& line, std::size_t lineno, const std::string& source)
      : line_(line), lineno_(lineno), source_(source) {}

  double number() {
    const std::string_view tok = next();
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) bad(tok);
    return v;
  }

  std::size_t index() {
    const std::string_view tok = next();
    std::size_t v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) bad(tok);
    return v;
  }

  bool flag() {
    const std::string_view tok = next();
    if (tok == "0") return false;
    if (tok == "1") return true;
    bad(tok);
  }

  void finish() const {
    if (pos_ <= line_.size()) {
      throw DatasetError(DatasetError::Kind::Format,
                         where() + ": more fields than the header declares");
    }
  }

 private:
  std::string_view next() {
    if (pos_ > line_.size()) {
      throw DatasetError(DatasetError::Kind::Truncated, where() + ": row ends after " +
                                                            std::to_string(field_) + " fields");
    }
    const std::size_t end = std::min(line_.find(',', pos_), line_.size());
    std::string_view tok(line_.data() + pos_, end - pos_);
    pos_ = end + 1;
    ++field_;
    return tok;
  }

  [[noreturn]] void bad(std::string_view tok) const {
    throw DatasetError(DatasetError::Kind::Format,
                       where() + ": field " + std::to_string(field_) + " '" + std::string(tok) + "' is not a number");
  }

  std::string where() const { return source_ + " line " + std::to_string(lineno_); }

  const std::string& line_;
  std::size_t lineno_;
  const std::string& source_;
  std::size_t pos_ = 0;
  std::size_t field_ = 0;
};

std::vector<TransitionRecord> read_rows(std::istream& in, const DatasetMeta& m, std::size_t first_line,
                                        const std::string& source, bool ends_with_newline) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DatasetError(DatasetError::Kind::Truncated, source + ": missing CSV header");
  }
  if (line != header_line(m)) {
    throw DatasetError(DatasetError::Kind::Consistency,
                       source + ": CSV header does not match metadata dims (state " + std::to_string(m.state_dim) +
                           ", action " + std::to_string(m.action_dim) + ")");
  }
  std::vector<TransitionRecord> rows;
  std::size_t lineno = first_line;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    // An unterminated last line was cut mid-write; judge it as truncation before parsing fields.
    if (!ends_with_newline && in.peek() == std::char_traits<char>::eof()) {
      throw DatasetError(DatasetError::Kind::Truncated, source + " line " + std::to_string(lineno) + ": file ends mid-row");
    }
    RowParser p(line, lineno, source);
    TransitionRecord r;
    r.episode = p.index();
    r.t = p.index();
    r.state.resize(m.state_dim);
    for (double& v : r.state) v = p.number();
    r.s = p.number();
    r.c = p.number();
    r.action.resize(m.action_dim);
    for (double& v : r.action) v = p.number();
    r.reward = p.number();
    r.next_state.resize(m.state_dim);
    for (double& v : r.next_state) v = p.number();
    r.next_s = p.number();
    r.next_c = p.number();
    r.done = p.flag();
    p.finish();
    rows.push_back(std::move(r));
  }
  return rows;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string sidecar_path(const std::string& csv_path) {
  return csv_path.substr(0, csv_path.size() - 4) + ".meta.json";
}

void save_dataset(const TransitionDataset& dataset, const std::string& path) {
  DatasetMeta meta = dataset.meta;
  meta.records = dataset.size();
  const bool sidecar = has_suffix(path, ".csv");
  auto open = [](const std::string& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + p);
    return out;
  };
  if (sidecar) {
    std::ofstream meta_out = open(sidecar_path(path));
    meta_out << meta_json(meta).dump(2) << '\n';
  }
  std::ofstream out = open(path);
  if (!sidecar) out << meta_json(meta).dump() << '\n';
  write_rows(out, meta, dataset.records);
  if (!out) throw InputError("write failed for " + path);
}

TransitionDataset load_dataset(const std::string& path) {
  const std::string text = slurp(path);
  const bool ends_nl = !text.empty() && text.back() == '\n';
  std::istringstream in(text);
  TransitionDataset d;
  std::size_t first_line = 1;
  if (has_suffix(path, ".csv")) {
    d.meta = parse_meta(slurp(sidecar_path(path)), sidecar_path(path));
  } else {
    std::string line;
    if (!std::getline(in, line)) throw DatasetError(DatasetError::Kind::Truncated, path + ": empty file");
    d.meta = parse_meta(line, path);
    first_line = 2;
  }
  d.records = read_rows(in, d.meta, first_line, path, ends_nl);
  validate_dataset(d);
  return d;
}

}  // namespace srm
