#include "hlsa/unimportance.hpp"

#include <algorithm>
#include <cmath>

namespace hlsa {

namespace {

std::vector<double> min_max(const std::vector<double>& values) {
  if (values.empty()) return {};
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(values.size(), 1.0);
  if (hi == lo) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = (values[i] - lo) / (hi - lo);
  }
  return out;
}

void add_scaled(Tensor& beta, const SignedMask& mask, double weight) {
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (mask[i] != 0) beta[i] += weight * mask[i];
  }
}

}  // namespace

void TrialEvidence::add(TrialOutcome outcome) {
  if (outcome.adversarial) {
    positive_weights.push_back(outcome.weight);
    positive_masks.push_back(std::move(outcome.mask));
  } else {
    negative_weights.push_back(outcome.weight);
    negative_masks.push_back(std::move(outcome.mask));
  }
}

TrialOutcome evaluate_trial(QueryChannel& channel, const Tensor& x0,
                            const BoundaryFit& fit, const BinaryMask& omega) {
  const BinaryMask zeroed = flip(omega);
  double sq = 0.0;
  for (std::size_t i = 0; i < zeroed.size(); ++i) {
    if (zeroed[i]) sq += fit.theta0[i] * fit.theta0[i];
  }
  const double gamma_l2 = std::sqrt(sq);
  if (channel.is_adversarial(along_masked(x0, fit.lambda0, fit.theta0, omega))) {
    return TrialOutcome{SignedMask(zeroed, +1), gamma_l2, true};
  }
  return TrialOutcome{SignedMask(zeroed, -1), -gamma_l2, false};
}

TrialOutcome run_trial(QueryChannel& channel, const Tensor& x0,
                       const BoundaryFit& fit, std::size_t p, Rng& rng) {
  BinaryMask omega = sample_zero_mask(rng, x0.shape(), p);
  return evaluate_trial(channel, x0, fit, omega);
}

NormalizedWeights normalize_weights(const TrialEvidence& evidence) {
  std::vector<double> negated(evidence.negative_weights.size());
  std::transform(evidence.negative_weights.begin(), evidence.negative_weights.end(),
                 negated.begin(), [](double w) { return -w; });
  return NormalizedWeights{min_max(evidence.positive_weights), min_max(negated)};
}

UnimportanceMatrix accumulate_beta(const TrialEvidence& evidence,
                                   const NormalizedWeights& weights,
                                   Shape shape) {
  if (weights.positive.size() != evidence.positive_masks.size() ||
      weights.negative.size() != evidence.negative_masks.size()) {
    throw ParameterError("weight lists do not align with trial masks");
  }
  UnimportanceMatrix out{Tensor(shape), evidence.trials()};
  for (std::size_t l = 0; l < weights.positive.size(); ++l) {
    add_scaled(out.beta, evidence.positive_masks[l], weights.positive[l]);
  }
  for (std::size_t h = 0; h < weights.negative.size(); ++h) {
    add_scaled(out.beta, evidence.negative_masks[h], weights.negative[h]);
  }
  return out;
}

UnimportanceMatrix build_unimportance(QueryChannel& channel, const Tensor& x0,
                                      const BoundaryFit& fit, std::size_t p,
                                      std::size_t trial_budget, Rng& rng) {
  if (p < 1 || p > x0.size()) {
    throw ParameterError("zero count p=" + std::to_string(p) + " outside [1, " +
                         std::to_string(x0.size()) + "]");
  }
  TrialEvidence evidence;
  try {
    for (std::size_t i = 0; i < trial_budget; ++i) {
      evidence.add(run_trial(channel, x0, fit, p, rng));
    }
  } catch (const BudgetExhausted&) {
    // Finalize with the trials completed so far.
  }
  return accumulate_beta(evidence, normalize_weights(evidence), x0.shape());
}

}  // namespace hlsa
