#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "hlsa/datasets.hpp"
#include "hlsa/eval.hpp"
#include "hlsa/pipeline.hpp"
#include "hlsa/report.hpp"
#include "hlsa/scenario.hpp"
#include "hlsa/weighted_net.hpp"

namespace fs = std::filesystem;
using namespace hlsa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAttackFailed = 2;

// Rejected flag combinations and values; reported before any query.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SignOptFlags {
  std::size_t probe_count = SignOptConfig{}.probe_count;
  std::size_t init_directions = SignOptConfig{}.num_init_directions;
  double eta0 = SignOptConfig{}.eta0;
  double epsilon_smooth = SignOptConfig{}.epsilon_smooth;
  double lambda_tolerance = SignOptConfig{}.lambda_tolerance;

  void add_to(CLI::App& app) {
    app.add_option("--probe-count", probe_count, "Random probes per sign-gradient estimate")
        ->capture_default_str();
    app.add_option("--init-directions", init_directions,
                   "Random directions tried by the initial boundary search")
        ->capture_default_str();
    app.add_option("--eta0", eta0, "First line-search step")->capture_default_str();
    app.add_option("--epsilon-smooth", epsilon_smooth, "Probe smoothing")
        ->capture_default_str();
    app.add_option("--lambda-tol", lambda_tolerance, "Boundary bisection tolerance")
        ->capture_default_str();
  }

  void apply(SignOptConfig& cfg) const {
    cfg.probe_count = probe_count;
    cfg.num_init_directions = init_directions;
    cfg.eta0 = eta0;
    cfg.epsilon_smooth = epsilon_smooth;
    cfg.lambda_tolerance = lambda_tolerance;
  }
};

struct AttackFlags {
  std::string model;
  std::string dataset;
  std::string mnist;
  std::size_t index = 0;
  std::string oracle;
  std::size_t dim = 2;
  double radius = 1.0;
  std::size_t support = 5;
  std::uint64_t oracle_seed = 0;

  std::string profile = "custom";
  std::optional<std::size_t> budget;
  std::optional<std::size_t> baseline;
  std::optional<std::size_t> p;
  std::string norm = "l2";
  std::optional<Label> target;
  std::uint64_t seed = 0;
  std::optional<bool> clip;
  double threshold_tol = kDefaultThresholdTolerance;
  SignOptFlags signopt;

  std::string output;
  std::string dump_beta;
};

void add_attack_options(CLI::App& cmd, AttackFlags& f) {
  cmd.add_option("--model", f.model, "SAWT model file");
  cmd.add_option("--dataset", f.dataset,
                 "IDX directory or raw tensor file (labels in <file>.labels.csv)");
  cmd.add_option("--mnist", f.mnist, "MNIST IDX directory (alias of --dataset)");
  cmd.add_option("--index", f.index, "Sample index within the dataset")
      ->capture_default_str();
  cmd.add_option("--oracle", f.oracle, "Synthetic oracle instead of a model")
      ->check(CLI::IsMember({"sphere", "hyperplane"}));
  cmd.add_option("--dim", f.dim, "Synthetic oracle dimension")->capture_default_str();
  cmd.add_option("--radius", f.radius, "Sphere oracle radius")->capture_default_str();
  cmd.add_option("--support", f.support, "Hyperplane oracle nonzero weights")
      ->capture_default_str();
  cmd.add_option("--oracle-seed", f.oracle_seed, "Seed of the synthetic oracle and samples")
      ->capture_default_str();

  cmd.add_option("--profile", f.profile,
                 "mnist|cifar10|imagenet set Q, N and p defaults; custom requires them")
      ->capture_default_str()
      ->check(CLI::IsMember({"mnist", "cifar10", "imagenet", "custom"}));
  cmd.add_option("--budget", f.budget, "Total query budget Q");
  cmd.add_option("--baseline", f.baseline, "Queries for the boundary attack N (0 < N <= Q)");
  cmd.add_option("--p", f.p, "Dimensions zeroed per unimportance trial");
  cmd.add_option("--norm", f.norm, "Attack norm")
      ->capture_default_str()
      ->check(CLI::IsMember({"l2", "linf"}));
  cmd.add_option("--target", f.target, "Target class (targeted mode)");
  cmd.add_option("--seed", f.seed, "Attack seed")->capture_default_str();
  cmd.add_flag("--clip,!--no-clip", f.clip,
               "Clamp every queried image to [0,1] (default: on for datasets, off "
               "for synthetic oracles)");
  cmd.add_option("--threshold-tol", f.threshold_tol, "Threshold search tolerance")
      ->capture_default_str();
  f.signopt.add_to(cmd);
}

AttackConfig build_attack_config(const AttackFlags& f, bool default_clip, std::size_t dim) {
  const DatasetProfile profile = parse_profile(f.profile);
  AttackConfig cfg;
  if (profile != DatasetProfile::kCustom) cfg = default_config(profile);
  if (f.budget) cfg.total_budget = *f.budget;
  if (f.baseline) cfg.baseline_budget = *f.baseline;
  if (f.p) cfg.p = *f.p;
  if (profile == DatasetProfile::kCustom && (!f.budget || !f.baseline || !f.p)) {
    throw UsageError("--budget, --baseline and --p are required without --profile");
  }
  cfg.norm = parse_norm(f.norm);
  cfg.target = f.target;
  cfg.seed = f.seed;
  cfg.clip = f.clip.value_or(default_clip);
  cfg.threshold_tol = f.threshold_tol;
  f.signopt.apply(cfg.signopt);
  cfg.signopt.norm = cfg.norm;
  cfg.validate(dim);
  return cfg;
}

void write_beta_csv(const fs::path& path, const Tensor& beta) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "index,beta\n";
  char buf[40];
  for (std::size_t i = 0; i < beta.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", beta[i]);
    out << i << "," << buf << "\n";
  }
}

int cmd_attack(const AttackFlags& f) {
  const bool synthetic = !f.oracle.empty();
  if (!f.dataset.empty() && !f.mnist.empty()) {
    throw UsageError("--dataset and --mnist are mutually exclusive");
  }
  const std::string dataset = f.dataset.empty() ? f.mnist : f.dataset;
  if (synthetic && (!f.model.empty() || !dataset.empty())) {
    throw UsageError("--oracle conflicts with --model/--dataset");
  }
  if (!synthetic && (f.model.empty() || dataset.empty())) {
    throw UsageError("either --oracle or both --model and --dataset are required");
  }

  Scenario scenario;
  if (synthetic) {
    SyntheticSpec spec;
    spec.kind = parse_synthetic_kind(f.oracle);
    spec.dim = f.dim;
    spec.radius = f.radius;
    spec.support = f.support;
    spec.samples = f.index + 1;
    spec.seed = f.oracle_seed;
    scenario = make_synthetic(spec);
  } else {
    scenario = load_model_scenario(f.model, dataset);
  }
  if (f.index >= scenario.images.size()) {
    throw UsageError("--index " + std::to_string(f.index) + " out of range (" +
                     std::to_string(scenario.images.size()) + " samples)");
  }
  const std::size_t dim = scenario.oracle->input_shape().size();
  AttackConfig cfg = build_attack_config(f, scenario.image_domain, dim);
  if (cfg.target) {
    if (*cfg.target < 0 ||
        static_cast<std::size_t>(*cfg.target) >= scenario.oracle->num_classes()) {
      throw UsageError("--target outside the model's classes");
    }
    for (std::size_t i = 0; i < scenario.images.size(); ++i) {
      if (i != f.index && scenario.labels[i] == *cfg.target) {
        cfg.signopt.target_exemplar = scenario.images[i];
        break;
      }
    }
  }

  std::unique_ptr<std::ofstream> file;
  if (!f.output.empty()) {
    file = std::make_unique<std::ofstream>(f.output, std::ios::trunc);
    if (!*file) throw std::runtime_error("cannot write " + f.output);
  }

  AttackTrace trace;
  const AttackRecord rec = attack(*scenario.oracle, scenario.images[f.index],
                                  scenario.labels[f.index], cfg, std::to_string(f.index),
                                  f.dump_beta.empty() ? nullptr : &trace);
  std::ostream& out = file ? *file : std::cout;
  out << record_to_jsonl(rec) << "\n";
  out.flush();
  if (!out) throw std::runtime_error("write failed");
  if (!f.dump_beta.empty()) {
    if (!trace.beta) {
      std::cerr << "no unimportance matrix was built; " << f.dump_beta << " not written\n";
    } else {
      write_beta_csv(f.dump_beta, *trace.beta);
    }
  }
  if (!rec.success()) {
    std::cerr << "attack " << to_string(rec.status) << ": " << rec.reason << "\n";
    return kExitAttackFailed;
  }
  return kExitOk;
}

struct BenchFlags {
  std::string spec_file;
  std::optional<std::size_t> jobs;
  std::string output;
  bool quiet = false;
};

int cmd_bench(const BenchFlags& f) {
  ExperimentSpec spec = load_experiment_spec(f.spec_file);
  if (f.jobs) spec.jobs = *f.jobs;
  if (!f.output.empty()) spec.output = f.output;
  spec.validate();
  const ExperimentResult result = run_experiment(spec, f.quiet ? nullptr : &std::cerr);
  std::cout << "wrote " << result.jsonl_path.string() << "\n"
            << "wrote " << result.csv_path.string() << "\n"
            << "wrote " << result.summary_json_path.string() << "\n";
  std::cout << kSummaryHeader << "\n";
  std::ifstream csv(result.csv_path);
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) std::cout << line << "\n";
  return kExitOk;
}

struct ReportFlags {
  std::string csv;
  std::string out_dir = ".";
};

int cmd_report(const ReportFlags& f) {
  const auto rows = read_summary_csv(f.csv);
  if (rows.empty()) {
    std::cerr << "no rows in " << f.csv << "\n";
    return kExitUsage;
  }
  fs::create_directories(f.out_dir);
  for (const auto& chart : render_charts(rows)) {
    const fs::path path = fs::path(f.out_dir) / (chart.name + ".svg");
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    out << chart.svg;
    if (!out) throw std::runtime_error("cannot write " + path.string());
    std::cout << "wrote " << path.string() << "\n";
  }
  return kExitOk;
}

struct InspectFlags {
  std::string model;
  std::vector<std::size_t> input_shape{1, 28, 28};
};

std::string describe(const Layer& layer) {
  return std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, layers::Dense>) {
          return "dense in=" + std::to_string(l.in) + " out=" + std::to_string(l.out);
        } else if constexpr (std::is_same_v<T, layers::Conv2d>) {
          return "conv2d out_ch=" + std::to_string(l.out_channels) +
                 " in_ch=" + std::to_string(l.in_channels) + " kernel=" +
                 std::to_string(l.kernel_h) + "x" + std::to_string(l.kernel_w) +
                 " stride=" + std::to_string(l.stride) + " pad=" + std::to_string(l.padding);
        } else if constexpr (std::is_same_v<T, layers::Relu>) {
          return "relu";
        } else if constexpr (std::is_same_v<T, layers::MaxPool2>) {
          return "maxpool2";
        } else {
          return "flatten";
        }
      },
      layer);
}

int cmd_inspect(const InspectFlags& f) {
  if (f.input_shape.size() != 3) throw UsageError("--input-shape takes C H W");
  const WeightedNet net = load_weighted_net(f.model);
  Shape shape{f.input_shape[0], f.input_shape[1], f.input_shape[2]};
  std::cout << "input " << shape.to_string() << "\n";
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const WeightedNet prefix(std::vector<Layer>(net.layers().begin(),
                                                net.layers().begin() + i + 1));
    std::cout << i << ": " << describe(net.layers()[i]) << " -> "
              << prefix.output_shape(shape).to_string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hard-label black-box attack toolkit: boundary attack followed by "
               "unimportance-guided sparsification"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  AttackFlags attack_flags;
  auto* attack_cmd = app.add_subcommand("attack", "Attack one sample, print a JSONL record");
  add_attack_options(*attack_cmd, attack_flags);
  attack_cmd->add_option("--output", attack_flags.output, "Write the record here (default: stdout)");
  attack_cmd->add_option("--dump-beta", attack_flags.dump_beta,
                         "Write the unimportance matrix as index,beta CSV");

  BenchFlags bench_flags;
  auto* bench_cmd = app.add_subcommand("bench", "Run an experiment spec file");
  bench_cmd->add_option("spec", bench_flags.spec_file, "Experiment spec (key=value lines)")
      ->required()
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--jobs", bench_flags.jobs, "Samples attacked concurrently");
  bench_cmd->add_option("--output", bench_flags.output, "Output stem (overrides the spec file's output)");
  bench_cmd->add_flag("--quiet", bench_flags.quiet, "No per-sample log on stderr");

  ReportFlags report_flags;
  auto* report_cmd = app.add_subcommand("report", "Render SVG charts from a summary CSV");
  report_cmd->add_option("csv", report_flags.csv, "Summary CSV written by bench")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report_flags.out_dir, "Output directory")
      ->capture_default_str();

  InspectFlags inspect_flags;
  auto* inspect_cmd = app.add_subcommand("inspect-model", "Print a SAWT model's layers");
  inspect_cmd->add_option("model", inspect_flags.model, "SAWT file")->required();
  inspect_cmd->add_option("--input-shape", inspect_flags.input_shape, "C H W")
      ->expected(3);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (attack_cmd->parsed()) return cmd_attack(attack_flags);
    if (bench_cmd->parsed()) return cmd_bench(bench_flags);
    if (report_cmd->parsed()) return cmd_report(report_flags);
    if (inspect_cmd->parsed()) return cmd_inspect(inspect_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
