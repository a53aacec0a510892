// One PASS/FAIL/SKIP line per acceptance criterion. Exits 1 if any criterion
// fails; a skipped criterion does not fail the run.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "generators.hpp"
#include "hlsa/eval.hpp"
#include "hlsa/pipeline.hpp"
#include "hlsa/scenario.hpp"
#include "hlsa/signopt.hpp"
#include "hlsa/sparsify.hpp"
#include "hlsa/synthetic_oracles.hpp"
#include "hlsa/unimportance.hpp"
#include "reference_unimportance.hpp"

using namespace hlsa;
namespace fs = std::filesystem;

namespace {

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) {
  return {ok ? Verdict::kPass : Verdict::kFail, std::move(detail)};
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

AttackConfig synthetic_config(std::size_t q, std::size_t n, std::size_t p, std::uint64_t seed) {
  AttackConfig cfg;
  cfg.total_budget = q;
  cfg.baseline_budget = n;
  cfg.p = p;
  cfg.seed = seed;
  cfg.clip = false;
  return cfg;
}

Scenario hyperplane(std::size_t dim, std::size_t support, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::kHyperplane;
  spec.dim = dim;
  spec.support = support;
  spec.seed = seed;
  return make_synthetic(spec);
}

Scenario sphere(std::size_t dim, double radius, std::size_t samples, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.dim = dim;
  spec.radius = radius;
  spec.samples = samples;
  spec.seed = seed;
  return make_synthetic(spec);
}

// ---------------------------------------------------------------------------

Outcome boundary_distance_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t dim = rng.uniform_index(2, 50);
    const auto hc = testgen::random_hyperplane(rng, dim);
    HyperplaneOracle o(hc.w, hc.b);
    // Directions that hit the plane inside g_eval's search cap.
    Tensor u;
    std::optional<double> analytic;
    do {
      u = normalized(sample_gaussian_direction(rng, hc.w.shape()), Norm::kL2);
      analytic = o.boundary_distance(hc.x0, u);
    } while (!analytic || *analytic > 9.0);
    QueryLedger ledger(10000);
    QueryChannel ch(o, ledger, Phase::kBaseline, AdversarialCriterion{0, {}});
    const auto got = g_eval(ch, hc.x0, u, 1e-6, Norm::kL2);
    if (!got) return {Verdict::kFail, "g_eval found no boundary on instance " + std::to_string(i)};
    worst = std::max(worst, std::abs(got->lambda - *analytic));
  }
  const double secs = seconds_since(t0);
  return pass_if(worst <= 1e-4 && secs < 10.0,
                 fmt("max |g - analytic| = %.3g (tol 1e-4), %.2f s (limit 10 s)", worst, secs));
}

Outcome signopt_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_sphere = 0.0, worst_plane = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    {
      const Shape s{1, 1, 2};
      SphereOracle o(Tensor(s), 1.0);
      QueryLedger ledger(3000);
      QueryChannel ch(o, ledger, Phase::kBaseline, AdversarialCriterion{1, {}});
      Rng rng(seed);
      const BoundaryFit fit = signopt_descend(ch, Tensor(s), SignOptConfig{}, rng);
      worst_sphere = std::max(worst_sphere, fit.lambda0 / o.min_escape(Tensor(s)) - 1.0);
    }
    {
      Rng gen(500 + seed);
      const auto hc = testgen::random_hyperplane(gen, 10);
      HyperplaneOracle o(hc.w, hc.b);
      QueryLedger ledger(3000);
      QueryChannel ch(o, ledger, Phase::kBaseline, AdversarialCriterion{0, {}});
      Rng rng(seed);
      const BoundaryFit fit = signopt_descend(ch, hc.x0, SignOptConfig{}, rng);
      worst_plane = std::max(worst_plane, fit.lambda0 / o.l2_distance(hc.x0) - 1.0);
    }
  }
  const double secs = seconds_since(t0);
  return pass_if(worst_sphere <= 0.05 && worst_plane <= 0.10 && secs < 60.0,
                 fmt("worst excess: sphere %.2f%% (tol 5%%), hyperplane %.2f%% (tol 10%%), %.1f s",
                     100 * worst_sphere, 100 * worst_plane, secs));
}

Outcome reference_equivalence() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng gen(seed);
    const std::size_t m = gen.uniform_index(1, 6);
    const Shape s{1, 1, m};
    const std::size_t p = gen.uniform_index(1, m);
    const std::size_t trials = gen.uniform_index(1, 64);
    const Tensor theta = normalized(sample_gaussian_direction(gen, s), Norm::kL2);
    const double lambda = 0.5 + 1.5 * gen.uniform();
    std::vector<std::size_t> required{gen.uniform_index(0, m - 1)};
    if (m > 1 && gen.uniform() < 0.5) required.push_back((required[0] + 1) % m);
    MaskLogicOracle o(s, required);
    BoundaryFit fit;
    fit.theta0 = theta;
    fit.lambda0 = lambda;
    QueryLedger ledger(trials);
    QueryChannel ch(o, ledger, Phase::kUnimportance, AdversarialCriterion{0, {}});
    Rng lib_rng(seed * 7 + 1), ref_rng(seed * 7 + 1);
    const auto got = build_unimportance(ch, Tensor(s), fit, p, trials, lib_rng);
    const auto want = reference::unimportance(o, 0, Tensor(s), theta, lambda, p, trials, ref_rng);
    for (std::size_t i = 0; i < m; ++i) worst = std::max(worst, std::abs(got.beta[i] - want[i]));
  }
  return pass_if(worst <= 1e-12, fmt("max elementwise |beta - reference| = %.3g (tol 1e-12)", worst));
}

Outcome threshold_exactness() {
  // Keep-masks are constant between consecutive beta levels, so checking
  // every level is an exhaustive scan of xi at unbounded resolution.
  Rng gen(4242);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = gen.uniform_index(2, 12);
    const Shape s{1, 1, n};
    std::vector<std::size_t> required;
    for (std::size_t k = 0; k < n; ++k) {
      if (gen.uniform() < 0.3) required.push_back(k);
    }
    if (required.empty()) required.push_back(gen.uniform_index(0, n - 1));
    MaskLogicOracle o(s, required);
    Tensor beta(s);
    for (std::size_t k = 0; k < n; ++k) beta[k] = gen.normal() * 10;
    BoundaryFit fit;
    fit.theta0 = normalized(testgen::uniform_image(gen, s), Norm::kL2);
    fit.lambda0 = 1.0;
    std::vector<double> levels(beta.data().begin(), beta.data().end());
    std::sort(levels.begin(), levels.end());
    double exact = levels.back();
    for (double v : levels) {
      if (o.decide(along_masked(Tensor(s), 1.0, fit.theta0, bin(beta, v))) != 0) {
        exact = v;
        break;
      }
    }
    QueryLedger ledger(1000);
    QueryChannel ch(o, ledger, Phase::kThreshold, AdversarialCriterion{0, {}});
    const ThresholdResult r = threshold_search(ch, Tensor(s), fit, beta);
    worst = std::max(worst, std::abs(r.t - exact));
  }
  return pass_if(worst <= 1e-6, fmt("max |t - t*| = %.3g over 200 cases (tol 1e-6)", worst));
}

struct InvariantTally {
  int runs = 0, successes = 0, violations = 0;
  std::string first;
};

void check_invariants(const Oracle& o, const Tensor& x0, const AttackRecord& r,
                      const AttackTrace& trace, InvariantTally& t) {
  ++t.runs;
  auto flag = [&](const std::string& what) {
    if (t.violations++ == 0) t.first = what + " (seed " + std::to_string(r.seed) + ")";
  };
  if (r.queries_total > r.budget) flag("queries exceed Q");
  if (!r.success()) return;
  ++t.successes;
  const Tensor initial = along(Tensor(x0.shape()), trace.fit->lambda0, trace.fit->theta0);
  for (Norm n : {Norm::kL0, Norm::kL2, Norm::kLinf}) {
    if (norm(r.delta, n) > norm(initial, n)) flag(to_string(n) + " grew under sparsification");
  }
  if (o.decide(along(x0, 1.0, r.delta)) == r.clean_label) flag("final example not adversarial");
}

Outcome run_invariants(Norm norm, int runs, std::uint64_t base_seed) {
  Rng gen(base_seed);
  InvariantTally t;
  for (int i = 0; i < runs; ++i) {
    const std::size_t dim = gen.uniform_index(2, 60);
    const Scenario sc = gen.uniform() < 0.5
                            ? sphere(dim, 0.3 + gen.uniform(), 1, gen.uniform_index(0, 1u << 30))
                            : hyperplane(dim, gen.uniform_index(1, dim), gen.uniform_index(0, 1u << 30));
    const std::size_t q = gen.uniform_index(50, 1500);
    AttackConfig cfg = synthetic_config(q, gen.uniform_index(1, q), gen.uniform_index(1, dim),
                                        base_seed * 1000 + i);
    cfg.norm = norm;
    AttackTrace trace;
    const AttackRecord r = attack(*sc.oracle, sc.images[0], sc.labels[0], cfg, "", &trace);
    check_invariants(*sc.oracle, sc.images[0], r, trace, t);
  }
  std::string detail = std::to_string(t.successes) + "/" + std::to_string(t.runs) +
                       " successful, " + std::to_string(t.violations) + " violations";
  if (!t.first.empty()) detail += "; first: " + t.first;
  return pass_if(t.violations == 0 && t.successes > 0, detail);
}

Outcome sparsity_construction() {
  const auto t0 = std::chrono::steady_clock::now();
  double total_pp = 0.0;
  int successes = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario sc = hyperplane(100, 5, seed);
    const AttackRecord r =
        attack(*sc.oracle, sc.images[0], sc.labels[0], synthetic_config(4000, 3000, 10, seed));
    if (!r.success()) continue;
    ++successes;
    total_pp += r.pp;
  }
  const double mean = successes ? total_pp / successes : 0.0;
  const double secs = seconds_since(t0);
  return pass_if(successes == 20 && mean >= 50.0 && secs < 120.0,
                 fmt("mean PP %.1f%% over %.0f/20 successes (need >= 50%%), %.1f s", mean,
                     successes, secs));
}

Outcome degenerate_split() {
  int identical = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario sc = seed % 2 ? sphere(8, 0.8, 1, seed) : hyperplane(30, 30, seed);
    const AttackConfig cfg = synthetic_config(800, 800, 3, seed);
    const AttackRecord r = attack(*sc.oracle, sc.images[0], sc.labels[0], cfg);
    QueryLedger ledger(cfg.total_budget);
    QueryChannel ch(*sc.oracle, ledger, Phase::kBaseline,
                    AdversarialCriterion{sc.labels[0], {}}, cfg.total_budget - 1);
    Rng rng(cfg.seed);
    const BoundaryFit fit = signopt_descend(ch, sc.images[0], cfg.signopt, rng);
    if (r.delta == along(Tensor(fit.theta0.shape()), fit.lambda0, fit.theta0)) ++identical;
  }
  return pass_if(identical == 20, std::to_string(identical) + "/20 bit-identical to phase 1");
}

Outcome mnist_directional() {
  const fs::path fixtures = HLSA_FIXTURE_DIR;
  const fs::path model = fixtures / "mnist_cnn.sawt";
  const fs::path data = fixtures / "mnist";
  if (!fs::exists(model) || !fs::exists(data)) {
    return {Verdict::kSkip, "fixture not present at " + fixtures.string()};
  }
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario sc = load_model_scenario(model, data);
  ExperimentSpec spec;
  spec.model = model;
  spec.dataset = data;
  for (std::size_t i = 0; i < 50; ++i) spec.indices.push_back(i);
  spec.cells = {Cell{4000, 3000, 10}, Cell{4000, 4000, 10}};
  spec.profile = DatasetProfile::kMnist;
  spec.epsilon = default_success_epsilon(DatasetProfile::kMnist);
  spec.seed = 1;
  spec.output = fs::temp_directory_path() / "hlsa_acceptance_mnist";
  const ExperimentResult res = run_experiment(spec, sc);
  const SummaryRow& full = res.rows.at(0);
  const SummaryRow& base = res.rows.at(1);
  if (!full.mean_pp || !full.sr || !base.sr || !full.median_l2 || !base.median_l2) {
    return {Verdict::kFail, "a metric is undefined (no successful records)"};
  }
  const double secs = seconds_since(t0);
  const bool a = *full.mean_pp >= 25.0 && *full.mean_pp <= 70.0;
  const bool b = *full.sr >= *base.sr - 5.0;
  const bool c = *full.median_l2 <= 1.1 * *base.median_l2;
  std::string detail =
      fmt("(a) mean PP %.1f%% in [25,70] ", *full.mean_pp) + (a ? "ok" : "NO") +
      fmt("; (b) SR %.1f%% vs baseline %.1f%% (min -5pp) ", *full.sr, *base.sr) + (b ? "ok" : "NO") +
      fmt("; (c) median L2 %.3f vs baseline %.3f (max 1.1x) ", *full.median_l2, *base.median_l2) +
      (c ? "ok" : "NO") + fmt("; %.0f s", secs);
  return pass_if(a && b && c && secs < 1800.0, detail);
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"boundary-distance exactness", boundary_distance_exactness},
      {"sign-opt convergence on analytic oracles", signopt_convergence},
      {"unimportance reference equivalence", reference_equivalence},
      {"threshold-search exactness", threshold_exactness},
      {"sparsification dominance (l2)", [] { return run_invariants(Norm::kL2, 200, 5); }},
      {"sparsity construction (hyperplane dim 100)", sparsity_construction},
      {"mnist directional reproduction", mnist_directional},
      {"degenerate split equivalence", degenerate_split},
      {"linf mode invariants", [] { return run_invariants(Norm::kLinf, 100, 9); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {Verdict::kFail, std::string("threw: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::kPass ? "PASS" : o.verdict == Verdict::kFail ? "FAIL" : "SKIP";
    if (o.verdict == Verdict::kFail) ++failures;
    std::printf("%s [%zu] %s: %s\n", tag, i + 1, criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
