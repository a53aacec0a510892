#ifndef HLSA_UNIMPORTANCE_HPP
#define HLSA_UNIMPORTANCE_HPP

#include <vector>

#include "hlsa/oracle.hpp"
#include "hlsa/rng.hpp"
#include "hlsa/signopt.hpp"
#include "hlsa/tensor.hpp"

namespace hlsa {

// Result of one randomized zeroing trial. mask is +flip(omega) when the
// zeroed perturbation stayed adversarial and -flip(omega) otherwise; weight
// is ±L2 of the zeroed coordinates of theta0, with the same sign.
struct TrialOutcome {
  SignedMask mask;
  double weight = 0.0;
  bool adversarial = false;
};

struct TrialEvidence {
  std::vector<double> positive_weights;  // each >= 0
  std::vector<double> negative_weights;  // each <= 0
  std::vector<SignedMask> positive_masks;
  std::vector<SignedMask> negative_masks;

  void add(TrialOutcome outcome);
  std::size_t trials() const {
    return positive_weights.size() + negative_weights.size();
  }
};

struct NormalizedWeights {
  std::vector<double> positive;  // in [0,1]
  std::vector<double> negative;  // in [0,1]
};

// Larger beta means the dimension is safer to drop.
struct UnimportanceMatrix {
  Tensor beta;
  std::size_t trials = 0;
};

// Probes x0 + lambda0·(theta0 ∘ omega) once.
TrialOutcome evaluate_trial(QueryChannel& channel, const Tensor& x0,
                            const BoundaryFit& fit, const BinaryMask& omega);

// Draws omega with exactly p zeros, then evaluate_trial.
TrialOutcome run_trial(QueryChannel& channel, const Tensor& x0,
                       const BoundaryFit& fit, std::size_t p, Rng& rng);

// Min-max normalization of each list; the negative list is negated first.
// A list whose entries are all equal (including a single entry) maps to 1s.
NormalizedWeights normalize_weights(const TrialEvidence& evidence);

UnimportanceMatrix accumulate_beta(const TrialEvidence& evidence,
                                   const NormalizedWeights& weights,
                                   Shape shape);

// Runs up to trial_budget trials (one query each), stopping early if the
// channel runs dry, then normalizes and accumulates.
UnimportanceMatrix build_unimportance(QueryChannel& channel, const Tensor& x0,
                                      const BoundaryFit& fit, std::size_t p,
                                      std::size_t trial_budget, Rng& rng);

}  // namespace hlsa

#endif  // HLSA_UNIMPORTANCE_HPP
