#include "hlsa/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace hlsa {

namespace {

double record_norm(const AttackRecord& r, Norm norm) {
  switch (norm) {
    case Norm::kL0:
      return r.l0;
    case Norm::kL2:
      return r.l2;
    case Norm::kLinf:
      return r.linf;
  }
  return r.l2;
}

bool attempted(const AttackRecord& r) { return r.status != AttackStatus::kSkipped; }

std::string format_real(double v) {
  if (!std::isfinite(v)) {
    throw std::runtime_error("cannot serialize non-finite value");
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\r':
        out += "\\r";
        break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

// Appends "key":value pairs in insertion order.
class JsonLine {
 public:
  JsonLine& str(const char* key, const std::string& v) { return raw(key, quote(v)); }
  JsonLine& integer(const char* key, long long v) { return raw(key, std::to_string(v)); }
  JsonLine& uinteger(const char* key, unsigned long long v) {
    return raw(key, std::to_string(v));
  }
  JsonLine& real(const char* key, double v) { return raw(key, format_real(v)); }
  JsonLine& boolean(const char* key, bool v) { return raw(key, v ? "true" : "false"); }
  JsonLine& raw(const char* key, const std::string& v) {
    out_ += out_.empty() ? "{" : ",";
    out_ += quote(key) + ":" + v;
    return *this;
  }
  std::string finish() const { return out_ + "}"; }

 private:
  std::string out_;
};

std::string format_optional(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string();
}

std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

// ---- metrics -------------------------------------------------------------

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::optional<double> success_rate(std::span<const AttackRecord> records,
                                   double epsilon, Norm norm) {
  std::size_t total = 0, hits = 0;
  for (const auto& r : records) {
    if (!attempted(r)) continue;
    ++total;
    if (r.success() && record_norm(r, norm) < epsilon) ++hits;
  }
  if (total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

std::optional<double> median_norm(std::span<const AttackRecord> records, Norm norm,
                                  bool successful_only) {
  std::vector<double> values;
  for (const auto& r : records) {
    if (!attempted(r)) continue;
    if (successful_only && !r.success()) continue;
    values.push_back(record_norm(r, norm));
  }
  return median(std::move(values));
}

double pp(const AttackRecord& record) {
  if (record.dimension == 0) throw ParameterError("record has no dimension");
  const double m = static_cast<double>(record.dimension);
  return 100.0 * (m - l0(record.delta)) / m;
}

// ---- record persistence --------------------------------------------------

std::string record_to_jsonl(const AttackRecord& r) {
  JsonLine j;
  j.str("cell_id", r.cell_id)
      .str("image_id", r.image_id)
      .str("status", to_string(r.status))
      .str("reason", r.reason)
      .integer("clean_label", r.clean_label)
      .integer("adversarial_label", r.adversarial_label)
      .raw("target", r.target ? std::to_string(*r.target) : "null")
      .str("norm", to_string(r.norm))
      .uinteger("dimension", r.dimension)
      .uinteger("budget", r.budget)
      .uinteger("baseline_budget", r.baseline_budget)
      .uinteger("p", r.p)
      .uinteger("seed", r.seed)
      .uinteger("trials", r.trials)
      .uinteger("queries_baseline", r.queries_baseline)
      .uinteger("queries_unimportance", r.queries_unimportance)
      .uinteger("queries_threshold", r.queries_threshold)
      .uinteger("queries_verification", r.queries_verification)
      .uinteger("queries_total", r.queries_total)
      .real("lambda0", r.lambda0)
      .real("initial_l0", r.initial_l0)
      .real("initial_l2", r.initial_l2)
      .real("l0", r.l0)
      .real("l2", r.l2)
      .real("linf", r.linf)
      .real("pp", r.pp)
      .real("t", r.t)
      .boolean("monotonicity_violation", r.monotonicity_violation)
      .boolean("clipped", r.clipped);
  const Shape s = r.delta.shape();
  j.raw("delta_shape", "[" + std::to_string(s.channels) + "," +
                           std::to_string(s.height) + "," + std::to_string(s.width) + "]");
  std::string idx = "[", val = "[";
  for (std::size_t i = 0; i < r.delta.size(); ++i) {
    if (r.delta[i] == 0.0) continue;
    if (idx.size() > 1) {
      idx += ",";
      val += ",";
    }
    idx += std::to_string(i);
    val += format_real(r.delta[i]);
  }
  j.raw("delta_index", idx + "]").raw("delta_value", val + "]");
  j.real("wall_time_ms", r.wall_time_ms);
  return j.finish();
}

AttackRecord record_from_jsonl(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  AttackRecord r;
  r.cell_id = j.at("cell_id").get<std::string>();
  r.image_id = j.at("image_id").get<std::string>();
  r.status = parse_status(j.at("status").get<std::string>());
  r.reason = j.at("reason").get<std::string>();
  r.clean_label = j.at("clean_label").get<Label>();
  r.adversarial_label = j.at("adversarial_label").get<Label>();
  if (!j.at("target").is_null()) r.target = j.at("target").get<Label>();
  r.norm = parse_norm(j.at("norm").get<std::string>());
  r.dimension = j.at("dimension").get<std::size_t>();
  r.budget = j.at("budget").get<std::size_t>();
  r.baseline_budget = j.at("baseline_budget").get<std::size_t>();
  r.p = j.at("p").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.trials = j.at("trials").get<std::size_t>();
  r.queries_baseline = j.at("queries_baseline").get<std::size_t>();
  r.queries_unimportance = j.at("queries_unimportance").get<std::size_t>();
  r.queries_threshold = j.at("queries_threshold").get<std::size_t>();
  r.queries_verification = j.at("queries_verification").get<std::size_t>();
  r.queries_total = j.at("queries_total").get<std::size_t>();
  r.lambda0 = j.at("lambda0").get<double>();
  r.initial_l0 = j.at("initial_l0").get<double>();
  r.initial_l2 = j.at("initial_l2").get<double>();
  r.l0 = j.at("l0").get<double>();
  r.l2 = j.at("l2").get<double>();
  r.linf = j.at("linf").get<double>();
  r.pp = j.at("pp").get<double>();
  r.t = j.at("t").get<double>();
  r.monotonicity_violation = j.at("monotonicity_violation").get<bool>();
  r.clipped = j.at("clipped").get<bool>();
  const auto& shape = j.at("delta_shape");
  Shape s{shape.at(0).get<std::size_t>(), shape.at(1).get<std::size_t>(),
          shape.at(2).get<std::size_t>()};
  Tensor delta(s);
  const auto& idx = j.at("delta_index");
  const auto& val = j.at("delta_value");
  if (idx.size() != val.size()) throw std::runtime_error("delta index/value length mismatch");
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto i = idx.at(k).get<std::size_t>();
    if (i >= delta.size()) throw std::runtime_error("delta index out of range");
    delta[i] = val.at(k).get<double>();
  }
  r.delta = std::move(delta);
  r.wall_time_ms = j.at("wall_time_ms").get<double>();
  return r;
}

void validate_record(const AttackRecord& r) {
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("record " + r.cell_id + "/" + r.image_id + ": " + what);
  };
  if (r.dimension == 0) fail("dimension is zero");
  if (r.delta.size() != r.dimension) fail("delta length differs from dimension");
  const double m = static_cast<double>(r.dimension);
  if (std::abs(r.pp - 100.0 * (m - r.l0) / m) > 1e-9) fail("pp disagrees with l0");
  if (r.l0 != l0(r.delta)) fail("l0 disagrees with delta");
  if (std::abs(r.l2 - l2(r.delta)) > 1e-12 * std::max(1.0, r.l2)) fail("l2 disagrees with delta");
  if (r.linf != linf(r.delta)) fail("linf disagrees with delta");
  if (r.queries_total != r.queries_baseline + r.queries_unimportance +
                             r.queries_threshold + r.queries_verification) {
    fail("per-phase queries do not sum to the total");
  }
  if (r.queries_total > r.budget) fail("queries exceed the budget");
  if (r.baseline_budget > r.budget) fail("baseline budget exceeds total budget");
  if (r.success()) {
    if (r.l0 == 0.0) fail("successful record with an empty perturbation");
    if (r.l2 > r.initial_l2 * (1.0 + 1e-12)) fail("l2 exceeds the pre-sparsification l2");
    if (r.l0 > r.initial_l0) fail("l0 exceeds the pre-sparsification l0");
  }
}

std::vector<AttackRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<AttackRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(record_from_jsonl(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return out;
}

// ---- summaries -----------------------------------------------------------

std::string Cell::id() const {
  return "Q" + std::to_string(budget) + "_N" + std::to_string(baseline) + "_p" +
         std::to_string(p);
}

std::string mode_string(const std::optional<Label>& target) {
  return target ? "targeted:" + std::to_string(*target) : "untargeted";
}

SummaryRow summarize(std::span<const AttackRecord> records, const Cell& cell,
                     Norm norm, const std::optional<Label>& target, double epsilon) {
  SummaryRow row;
  row.cell_id = cell.id();
  row.budget = cell.budget;
  row.baseline = cell.baseline;
  row.p = cell.p;
  row.norm = to_string(norm);
  row.mode = mode_string(target);
  row.sr = success_rate(records, epsilon, norm);
  row.median_l2 = median_norm(records, Norm::kL2);
  row.median_linf = median_norm(records, Norm::kLinf);
  row.median_l2_all = median_norm(records, Norm::kL2, false);
  std::vector<double> pps, queries;
  for (const auto& r : records) {
    if (!attempted(r)) continue;
    ++row.n;
    queries.push_back(static_cast<double>(r.queries_total));
    if (r.success()) pps.push_back(r.pp);
  }
  if (!pps.empty()) {
    row.mean_pp = std::accumulate(pps.begin(), pps.end(), 0.0) /
                  static_cast<double>(pps.size());
  }
  row.median_queries = median(std::move(queries));
  return row;
}

void write_summary_csv(const std::filesystem::path& path,
                       std::span<const SummaryRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kSummaryHeader << "\n";
  for (const auto& r : rows) {
    out << r.cell_id << "," << r.budget << "," << r.baseline << "," << r.p << ","
        << r.norm << "," << r.mode << "," << format_optional(r.sr) << ","
        << format_optional(r.median_l2) << "," << format_optional(r.median_linf) << ","
        << format_optional(r.mean_pp) << "," << format_optional(r.median_queries)
        << "," << r.n << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != kSummaryHeader) {
    throw std::runtime_error(path.string() + ":1: missing or unexpected header");
  }
  std::vector<SummaryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto f = split(trim(line), ',');
    if (f.size() != 12) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected 12 fields, got " + std::to_string(f.size()));
    }
    try {
      SummaryRow r;
      r.cell_id = f[0];
      r.budget = std::stoul(f[1]);
      r.baseline = std::stoul(f[2]);
      r.p = std::stoul(f[3]);
      r.norm = f[4];
      r.mode = f[5];
      r.sr = parse_optional(f[6]);
      r.median_l2 = parse_optional(f[7]);
      r.median_linf = parse_optional(f[8]);
      r.mean_pp = parse_optional(f[9]);
      r.median_queries = parse_optional(f[10]);
      r.n = std::stoul(f[11]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": malformed number");
    }
  }
  return rows;
}

// ---- experiment spec -----------------------------------------------------

void ExperimentSpec::validate() const {
  if (!synthetic && (model.empty() || dataset.empty())) {
    throw ParameterError("experiment needs either model+dataset or oracle");
  }
  if (cells.empty()) throw ParameterError("experiment has no (Q, N, p) cells");
  for (const auto& c : cells) {
    if (c.baseline == 0 || c.baseline > c.budget) {
      throw ParameterError("cell " + c.id() + " violates 0 < N <= Q");
    }
    if (c.p == 0) throw ParameterError("cell " + c.id() + " has p = 0");
  }
  std::vector<std::size_t> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ParameterError("sample indices must be unique");
  }
  if (output.empty()) throw ParameterError("experiment needs an output path");
  if (jobs == 0) throw ParameterError("jobs must be >= 1");
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be > 0");
}

namespace {

std::vector<std::size_t> parse_size_list(const std::string& value) {
  std::vector<std::size_t> out;
  for (const auto& raw : split(value, ',')) {
    const std::string item = trim(raw);
    if (item.empty()) throw std::invalid_argument("empty list item");
    auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      std::size_t a = std::stoul(item.substr(0, dash));
      std::size_t b = std::stoul(item.substr(dash + 1));
      if (b < a) throw std::invalid_argument("descending range " + item);
      for (std::size_t i = a; i <= b; ++i) out.push_back(i);
    } else {
      std::size_t pos = 0;
      out.push_back(std::stoul(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("not an integer: " + item);
    }
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("not a boolean: " + v);
}

double parse_real(const std::string& v) {
  std::size_t pos = 0;
  double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not a number: " + v);
  return d;
}

std::size_t parse_size(const std::string& v) {
  auto list = parse_size_list(v);
  if (list.size() != 1) throw std::invalid_argument("expected one integer: " + v);
  return list.front();
}

}  // namespace

ExperimentSpec parse_experiment_spec(std::istream& in,
                                     const std::filesystem::path& base_dir) {
  ExperimentSpec spec;
  std::vector<std::size_t> budgets, baselines, ps;
  std::optional<SyntheticSpec> synthetic;
  std::optional<double> epsilon;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  auto synth = [&]() -> SyntheticSpec& {
    if (!synthetic) synthetic.emplace();
    return *synthetic;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    auto fail = [&](const std::string& why) {
      throw ParameterError("spec line " + std::to_string(line_no) + ": " + why);
    };
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail("expected key=value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (value.empty()) fail("empty value for '" + key + "'");
    try {
      if (key == "dataset") {
        spec.dataset = resolve(value);
      } else if (key == "model") {
        spec.model = resolve(value);
      } else if (key == "oracle") {
        synth().kind = parse_synthetic_kind(value);
      } else if (key == "dim") {
        synth().dim = parse_size(value);
      } else if (key == "radius") {
        synth().radius = parse_real(value);
      } else if (key == "support") {
        synth().support = parse_size(value);
      } else if (key == "samples") {
        synth().samples = parse_size(value);
      } else if (key == "oracle_seed") {
        synth().seed = parse_size(value);
      } else if (key == "indices") {
        spec.indices = parse_size_list(value);
      } else if (key == "cells") {
        for (const auto& item : split(value, ',')) {
          auto parts = split(trim(item), ':');
          if (parts.size() != 3) fail("cells entries look like Q:N:p");
          spec.cells.push_back(Cell{parse_size(parts[0]), parse_size(parts[1]),
                                    parse_size(parts[2])});
        }
      } else if (key == "budget") {
        budgets = parse_size_list(value);
      } else if (key == "baseline") {
        baselines = parse_size_list(value);
      } else if (key == "p") {
        ps = parse_size_list(value);
      } else if (key == "norm") {
        spec.norm = parse_norm(value);
      } else if (key == "mode") {
        if (value == "untargeted") {
          spec.target.reset();
        } else if (value.rfind("targeted:", 0) == 0) {
          spec.target = static_cast<Label>(std::stol(value.substr(9)));
        } else {
          fail("mode must be untargeted or targeted:<class>");
        }
      } else if (key == "profile") {
        spec.profile = parse_profile(value);
      } else if (key == "epsilon") {
        epsilon = parse_real(value);
      } else if (key == "seed") {
        spec.seed = std::stoull(value);
      } else if (key == "output") {
        spec.output = resolve(value);
      } else if (key == "clip") {
        spec.clip = parse_bool(value);
      } else if (key == "jobs") {
        spec.jobs = parse_size(value);
      } else if (key == "probe_count") {
        spec.signopt.probe_count = parse_size(value);
      } else if (key == "init_directions") {
        spec.signopt.num_init_directions = parse_size(value);
      } else if (key == "eta0") {
        spec.signopt.eta0 = parse_real(value);
      } else if (key == "epsilon_smooth") {
        spec.signopt.epsilon_smooth = parse_real(value);
      } else if (key == "lambda_tolerance") {
        spec.signopt.lambda_tolerance = parse_real(value);
      } else if (key == "threshold_tol") {
        spec.threshold_tol = parse_real(value);
      } else {
        fail("unknown key '" + key + "'");
      }
    } catch (const ParameterError&) {
      throw;
    } catch (const std::exception& e) {
      fail("bad value for '" + key + "': " + e.what());
    }
  }

  if (!budgets.empty() || !baselines.empty() || !ps.empty()) {
    if (!spec.cells.empty()) {
      throw ParameterError("spec: use either cells= or budget=/baseline=/p=, not both");
    }
    if (budgets.empty() || baselines.empty() || ps.empty()) {
      throw ParameterError("spec: budget, baseline and p must all be given");
    }
    for (auto q : budgets) {
      for (auto p : ps) {
        for (auto n : baselines) spec.cells.push_back(Cell{q, n, p});
      }
    }
  }
  spec.synthetic = synthetic;
  if (epsilon) {
    spec.epsilon = *epsilon;
  } else if (spec.profile != DatasetProfile::kCustom) {
    spec.epsilon = default_success_epsilon(spec.profile);
  } else {
    throw ParameterError("spec: epsilon is required for the custom profile");
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_experiment_spec(in, path.parent_path());
}

// ---- experiment runner ---------------------------------------------------

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* ext) {
  return std::filesystem::path(base.string() + ext);
}

AttackConfig cell_config(const ExperimentSpec& spec, const Cell& cell, bool clip) {
  AttackConfig cfg;
  cfg.total_budget = cell.budget;
  cfg.baseline_budget = cell.baseline;
  cfg.p = cell.p;
  cfg.norm = spec.norm;
  cfg.target = spec.target;
  cfg.signopt = spec.signopt;
  cfg.threshold_tol = spec.threshold_tol;
  cfg.clip = clip;
  return cfg;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream* log) {
  spec.validate();
  Scenario scenario = spec.synthetic ? make_synthetic(*spec.synthetic)
                                     : load_model_scenario(spec.model, spec.dataset);
  return run_experiment(spec, scenario, log);
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const Scenario& scenario,
                                std::ostream* log) {
  spec.validate();
  std::vector<std::size_t> indices = spec.indices;
  if (indices.empty()) {
    indices.resize(scenario.images.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
  }
  for (auto i : indices) {
    if (i >= scenario.images.size()) {
      throw ParameterError("sample index " + std::to_string(i) + " out of range (" +
                           std::to_string(scenario.images.size()) + " samples)");
    }
  }
  const bool clip = spec.clip.value_or(scenario.image_domain);
  const std::size_t dim = scenario.oracle->input_shape().size();
  for (const auto& cell : spec.cells) cell_config(spec, cell, clip).validate(dim);

  std::optional<Tensor> exemplar;
  if (spec.target) {
    for (std::size_t i = 0; i < scenario.images.size(); ++i) {
      if (scenario.labels[i] == *spec.target) {
        exemplar = scenario.images[i];
        break;
      }
    }
  }

  ExperimentResult result;
  result.jsonl_path = with_suffix(spec.output, ".jsonl");
  result.csv_path = with_suffix(spec.output, ".csv");
  result.summary_json_path = with_suffix(spec.output, ".summary.json");
  if (spec.output.has_parent_path()) {
    std::filesystem::create_directories(spec.output.parent_path());
  }
  std::ofstream jsonl(result.jsonl_path, std::ios::trunc);
  if (!jsonl) throw std::runtime_error("cannot write " + result.jsonl_path.string());

  for (const auto& cell : spec.cells) {
    AttackConfig base = cell_config(spec, cell, clip);
    base.signopt.target_exemplar = exemplar;
    const std::size_t n = indices.size();
    std::vector<std::optional<AttackRecord>> done(n);
    std::size_t next_to_write = 0;
    std::mutex mu;
    std::atomic<std::size_t> next_job{0};
    std::string io_error;

    auto worker = [&]() {
      for (std::size_t k = next_job++; k < n; k = next_job++) {
        const std::size_t index = indices[k];
        AttackConfig cfg = base;
        cfg.seed = Rng::derive(spec.seed, index);
        AttackRecord rec;
        try {
          rec = attack(*scenario.oracle, scenario.images[index], scenario.labels[index],
                       cfg, std::to_string(index));
        } catch (const std::exception& e) {
          rec.image_id = std::to_string(index);
          rec.clean_label = scenario.labels[index];
          rec.status = AttackStatus::kFailure;
          rec.reason = e.what();
          rec.norm = cfg.norm;
          rec.target = cfg.target;
          rec.dimension = dim;
          rec.delta = Tensor(scenario.images[index].shape());
          rec.pp = 100.0;
          rec.budget = cfg.total_budget;
          rec.baseline_budget = cfg.baseline_budget;
          rec.p = cfg.p;
          rec.seed = cfg.seed;
        }
        rec.cell_id = cell.id();
        std::lock_guard<std::mutex> lock(mu);
        done[k] = std::move(rec);
        // Emit in sample order so reruns produce identical files.
        while (next_to_write < n && done[next_to_write]) {
          jsonl << record_to_jsonl(*done[next_to_write]) << "\n";
          jsonl.flush();
          if (!jsonl && io_error.empty()) io_error = "write failed for " + result.jsonl_path.string();
          if (log) {
            const auto& r = *done[next_to_write];
            *log << cell.id() << " sample " << r.image_id << ": " << to_string(r.status)
                 << " l2=" << r.l2 << " pp=" << r.pp << " queries=" << r.queries_total
                 << "\n";
          }
          ++next_to_write;
        }
      }
    };

    const std::size_t jobs = std::min(spec.jobs, std::max<std::size_t>(1, n));
    if (jobs <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (!io_error.empty()) {
      if (log) *log << "cell " << cell.id() << " aborted: " << io_error << "\n";
      throw std::runtime_error(io_error);
    }

    std::vector<AttackRecord> records;
    records.reserve(n);
    for (auto& r : done) records.push_back(std::move(*r));
    result.rows.push_back(summarize(records, cell, spec.norm, spec.target, spec.epsilon));
  }

  write_summary_csv(result.csv_path, result.rows);

  nlohmann::ordered_json sidecar = nlohmann::ordered_json::array();
  for (const auto& r : result.rows) {
    auto opt = [](const std::optional<double>& v) -> nlohmann::ordered_json {
      return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    sidecar.push_back({{"cell_id", r.cell_id},
                       {"epsilon", spec.epsilon},
                       {"sr", opt(r.sr)},
                       {"median_l2_successful", opt(r.median_l2)},
                       {"median_l2_all", opt(r.median_l2_all)},
                       {"median_linf", opt(r.median_linf)},
                       {"mean_pp", opt(r.mean_pp)},
                       {"median_queries", opt(r.median_queries)},
                       {"n", r.n}});
  }
  std::ofstream side(result.summary_json_path, std::ios::trunc);
  side << sidecar.dump(2) << "\n";
  return result;
}

std::vector<SummaryRow> summarize_jsonl(const std::filesystem::path& jsonl,
                                        const ExperimentSpec& spec) {
  auto records = read_jsonl(jsonl);
  std::vector<SummaryRow> rows;
  for (const auto& cell : spec.cells) {
    std::vector<AttackRecord> mine;
    for (const auto& r : records) {
      if (r.cell_id == cell.id()) mine.push_back(r);
    }
    rows.push_back(summarize(mine, cell, spec.norm, spec.target, spec.epsilon));
  }
  return rows;
}

}  // namespace hlsa
