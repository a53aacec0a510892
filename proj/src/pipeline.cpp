#include "hlsa/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "hlsa/unimportance.hpp"

namespace hlsa {

DatasetProfile parse_profile(const std::string& text) {
  if (text == "mnist") return DatasetProfile::kMnist;
  if (text == "cifar10") return DatasetProfile::kCifar10;
  if (text == "imagenet") return DatasetProfile::kImagenet;
  if (text == "custom") return DatasetProfile::kCustom;
  throw ParameterError("unknown profile '" + text + "'");
}

std::string to_string(DatasetProfile profile) {
  switch (profile) {
    case DatasetProfile::kMnist:
      return "mnist";
    case DatasetProfile::kCifar10:
      return "cifar10";
    case DatasetProfile::kImagenet:
      return "imagenet";
    case DatasetProfile::kCustom:
      return "custom";
  }
  return "?";
}

double default_success_epsilon(DatasetProfile profile) {
  switch (profile) {
    case DatasetProfile::kMnist:
      return 1.5;
    case DatasetProfile::kCifar10:
      return 0.5;
    case DatasetProfile::kImagenet:
      return 3.0;
    case DatasetProfile::kCustom:
      break;
  }
  throw ParameterError("custom profile has no default success threshold");
}

void AttackConfig::validate(std::size_t dimension) const {
  if (baseline_budget == 0 || baseline_budget > total_budget) {
    throw ParameterError("baseline budget N=" + std::to_string(baseline_budget) +
                         " must satisfy 0 < N <= Q=" + std::to_string(total_budget));
  }
  if (p < 1 || p > dimension) {
    throw ParameterError("p=" + std::to_string(p) + " must lie in [1, " +
                         std::to_string(dimension) + "]");
  }
  if (norm == Norm::kL0) throw ParameterError("attack norm must be l2 or linf");
  if (!(threshold_tol > 0.0)) throw ParameterError("threshold_tol must be > 0");
  signopt.validate();
}

AttackConfig default_config(DatasetProfile profile) {
  if (profile == DatasetProfile::kCustom) {
    throw ParameterError("custom profile: set every AttackConfig field explicitly");
  }
  AttackConfig cfg;
  cfg.total_budget = 4000;
  cfg.baseline_budget = 3 * cfg.total_budget / 4;
  cfg.p = profile == DatasetProfile::kImagenet ? 500 : 10;
  cfg.norm = Norm::kL2;
  cfg.clip = true;
  return cfg;
}

const char* to_string(AttackStatus status) {
  switch (status) {
    case AttackStatus::kSuccess:
      return "success";
    case AttackStatus::kFailure:
      return "failure";
    case AttackStatus::kSkipped:
      return "skipped";
  }
  return "?";
}

AttackStatus parse_status(const std::string& text) {
  if (text == "success") return AttackStatus::kSuccess;
  if (text == "failure") return AttackStatus::kFailure;
  if (text == "skipped") return AttackStatus::kSkipped;
  throw ParameterError("unknown attack status '" + text + "'");
}

namespace {
constexpr std::size_t kVerificationQueries = 1;
}  // namespace

std::size_t threshold_reserve(const AttackConfig& cfg) {
  // |beta| never exceeds the trial count, and trials never exceed Q − N.
  const double trials = static_cast<double>(
      std::max<std::size_t>(1, cfg.total_budget - cfg.baseline_budget));
  return threshold_query_bound(2.0 * trials, cfg.threshold_tol) + kVerificationQueries;
}

namespace {

void set_norms(AttackRecord& rec, Tensor delta) {
  rec.delta = std::move(delta);
  rec.l0 = l0(rec.delta);
  rec.l2 = l2(rec.delta);
  rec.linf = linf(rec.delta);
  rec.pp = 100.0 * (static_cast<double>(rec.dimension) - rec.l0) /
           static_cast<double>(rec.dimension);
}

void set_queries(AttackRecord& rec, const QueryLedger& ledger) {
  rec.queries_baseline = ledger.tally(Phase::kBaseline);
  rec.queries_unimportance = ledger.tally(Phase::kUnimportance);
  rec.queries_threshold = ledger.tally(Phase::kThreshold);
  rec.queries_verification = ledger.tally(Phase::kVerification);
  rec.queries_total = ledger.used();
}

}  // namespace

AttackRecord attack(const Oracle& oracle, const Tensor& x0, Label y0,
                    const AttackConfig& cfg, const std::string& image_id,
                    AttackTrace* trace) {
  const auto started = std::chrono::steady_clock::now();
  auto finish = [&](AttackRecord& rec) {
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - started)
                           .count();
    return rec;
  };

  require_same_shape(x0.shape(), oracle.input_shape(), "attack input");
  const std::size_t m = x0.size();
  cfg.validate(m);

  AttackRecord rec;
  rec.image_id = image_id;
  rec.clean_label = y0;
  rec.norm = cfg.norm;
  rec.target = cfg.target;
  rec.dimension = m;
  rec.budget = cfg.total_budget;
  rec.baseline_budget = cfg.baseline_budget;
  rec.p = cfg.p;
  rec.seed = cfg.seed;
  rec.clipped = cfg.clip;
  set_norms(rec, Tensor(x0.shape()));

  // With clipping on, every phase observes the clamped image; the final
  // point's decision is then the one threshold search already observed.
  const ClippedOracle clipped_view(oracle);
  const Oracle& view = cfg.clip ? clipped_view : oracle;
  auto reported = [&](Tensor delta) {
    return cfg.clip ? subtract(clip_unit(along(x0, 1.0, delta)), x0) : delta;
  };

  const Label clean = view.decide(x0);
  if (clean != y0) {
    rec.status = AttackStatus::kSkipped;
    rec.reason = "clean image classified as " + std::to_string(clean) +
                 ", expected " + std::to_string(y0);
    return finish(rec);
  }
  if (cfg.target && *cfg.target == y0) {
    rec.status = AttackStatus::kSkipped;
    rec.reason = "clean image already has the target class";
    return finish(rec);
  }

  const AdversarialCriterion criterion{y0, cfg.target};
  QueryLedger ledger(cfg.total_budget);
  Rng rng(cfg.seed);
  SignOptConfig signopt_cfg = cfg.signopt;
  signopt_cfg.norm = cfg.norm;

  // Phase 1: boundary fit.
  std::optional<BoundaryFit> fit;
  std::string init_error;
  std::size_t phase1_limit = std::min(cfg.baseline_budget,
                                     cfg.total_budget - kVerificationQueries);
  for (int attempt = 0; attempt < 2 && !fit && phase1_limit > 0; ++attempt) {
    QueryChannel channel(view, ledger, Phase::kBaseline, criterion, phase1_limit);
    try {
      fit = signopt_descend(channel, x0, signopt_cfg, rng);
    } catch (const InitFailure& e) {
      init_error = e.what();
      // Hand whatever is left back to phase 1.
      phase1_limit = ledger.remaining() > kVerificationQueries
                         ? ledger.remaining() - kVerificationQueries
                         : 0;
    }
  }
  if (!fit) {
    rec.status = AttackStatus::kFailure;
    rec.reason = init_error.empty() ? "no budget for the baseline phase" : init_error;
    set_queries(rec, ledger);
    return finish(rec);
  }
  rec.lambda0 = fit->lambda0;
  {
    const Tensor initial = reported(along(Tensor(x0.shape()), fit->lambda0, fit->theta0));
    rec.initial_l0 = l0(initial);
    rec.initial_l2 = l2(initial);
  }

  // Phase 2: unimportance trials.
  const std::size_t reserve = threshold_reserve(cfg);
  std::size_t trial_budget = cfg.total_budget - cfg.baseline_budget;
  trial_budget = trial_budget > reserve ? trial_budget - reserve : 0;
  trial_budget = std::min(trial_budget,
                          ledger.remaining() > reserve ? ledger.remaining() - reserve : 0);
  QueryChannel trials_channel(view, ledger, Phase::kUnimportance, criterion, trial_budget);
  UnimportanceMatrix beta =
      build_unimportance(trials_channel, x0, *fit, cfg.p, trial_budget, rng);
  rec.trials = beta.trials;

  // Phase 3: threshold search.
  QueryChannel threshold_channel(view, ledger, Phase::kThreshold, criterion,
                                 ledger.remaining() - kVerificationQueries);
  ThresholdResult tr =
      threshold_search(threshold_channel, x0, *fit, beta.beta, cfg.threshold_tol);
  rec.t = tr.t;
  rec.monotonicity_violation = tr.monotonicity_violation;

  // One fresh query on the example exactly as reported.
  Tensor delta = reported(finalize_delta(*fit, tr));
  QueryChannel verify_channel(view, ledger, Phase::kVerification, criterion);
  const Label label = verify_channel.decide(along(x0, 1.0, delta));
  set_norms(rec, std::move(delta));
  set_queries(rec, ledger);
  rec.adversarial_label = label;
  if (criterion.is_adversarial(label) && rec.l0 > 0.0) {
    rec.status = AttackStatus::kSuccess;
  } else {
    rec.status = AttackStatus::kFailure;
    rec.reason = rec.l0 > 0.0 ? "final example is not adversarial"
                              : "perturbation vanished after clipping";
  }
  if (trace) {
    trace->fit = *fit;
    trace->beta = std::move(beta.beta);
  }
  return finish(rec);
}

}  // namespace hlsa
