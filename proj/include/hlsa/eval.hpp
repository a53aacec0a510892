#ifndef HLSA_EVAL_HPP
#define HLSA_EVAL_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hlsa/pipeline.hpp"
#include "hlsa/scenario.hpp"

namespace hlsa {

// ---- metrics -------------------------------------------------------------

// Percentage of attempted (non-skipped) records that succeeded with
// norm(delta) < epsilon. nullopt when nothing was attempted.
std::optional<double> success_rate(std::span<const AttackRecord> records,
                                   double epsilon, Norm norm);

// Median of norm(delta); over successful records by default, or over every
// attempted record. Even counts average the two central values.
std::optional<double> median_norm(std::span<const AttackRecord> records, Norm norm,
                                  bool successful_only = true);

// 100·(M − l0(delta))/M.
double pp(const AttackRecord& record);

std::optional<double> median(std::vector<double> values);

// ---- record persistence --------------------------------------------------

// One JSON object per line, fixed field order, reals with 17 significant
// digits. The perturbation is stored sparsely (delta_index / delta_value).
std::string record_to_jsonl(const AttackRecord& record);
AttackRecord record_from_jsonl(const std::string& line);

// Throws std::runtime_error describing the first broken invariant.
void validate_record(const AttackRecord& record);

std::vector<AttackRecord> read_jsonl(const std::filesystem::path& path);

// ---- experiments ---------------------------------------------------------

struct Cell {
  std::size_t budget = 0;    // Q
  std::size_t baseline = 0;  // N
  std::size_t p = 0;
  std::string id() const;
};

struct SummaryRow {
  std::string cell_id;
  std::size_t budget = 0;
  std::size_t baseline = 0;
  std::size_t p = 0;
  std::string norm;
  std::string mode;
  std::optional<double> sr;
  std::optional<double> median_l2;
  std::optional<double> median_linf;
  std::optional<double> mean_pp;
  std::optional<double> median_queries;
  std::size_t n = 0;  // attempted records
  // Median L2 over every attempted record, successful or not.
  std::optional<double> median_l2_all;
};

inline constexpr const char* kSummaryHeader =
    "cell_id,Q,N,p,norm,mode,sr,median_l2,median_linf,mean_pp,median_queries,n";

std::string mode_string(const std::optional<Label>& target);

SummaryRow summarize(std::span<const AttackRecord> records, const Cell& cell,
                     Norm norm, const std::optional<Label>& target, double epsilon);

void write_summary_csv(const std::filesystem::path& path,
                       std::span<const SummaryRow> rows);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

struct ExperimentSpec {
  // Either a model + dataset or a synthetic oracle.
  std::filesystem::path dataset;
  std::filesystem::path model;
  std::optional<SyntheticSpec> synthetic;

  std::vector<std::size_t> indices;  // empty: every sample
  std::vector<Cell> cells;
  Norm norm = Norm::kL2;
  std::optional<Label> target;
  DatasetProfile profile = DatasetProfile::kCustom;
  double epsilon = 1.5;  // success threshold
  std::uint64_t seed = 0;
  std::filesystem::path output;  // writes <output>.jsonl and <output>.csv
  std::optional<bool> clip;      // default: on for image datasets
  SignOptConfig signopt;
  double threshold_tol = kDefaultThresholdTolerance;
  std::size_t jobs = 1;

  void validate() const;
};

// Flat key=value lines, '#' comments, list values comma-separated. Errors
// name the offending line. Relative paths resolve against base_dir.
ExperimentSpec parse_experiment_spec(std::istream& in,
                                     const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

struct ExperimentResult {
  std::vector<SummaryRow> rows;
  std::filesystem::path jsonl_path;
  std::filesystem::path csv_path;
  std::filesystem::path summary_json_path;
};

// Runs every cell over every selected sample. Records are appended to the
// JSONL as they complete (in sample order); the CSV summary and a JSON
// sidecar with the all-records medians are written at the end.
ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream* log = nullptr);

// Same, for an already-built scenario.
ExperimentResult run_experiment(const ExperimentSpec& spec, const Scenario& scenario,
                                std::ostream* log = nullptr);

// Recomputes summary rows from a JSONL file.
std::vector<SummaryRow> summarize_jsonl(const std::filesystem::path& jsonl,
                                        const ExperimentSpec& spec);

}  // namespace hlsa

#endif  // HLSA_EVAL_HPP
