#ifndef HLSA_SPARSIFY_HPP
#define HLSA_SPARSIFY_HPP

#include "hlsa/oracle.hpp"
#include "hlsa/signopt.hpp"
#include "hlsa/tensor.hpp"
#include "hlsa/unimportance.hpp"

namespace hlsa {

inline constexpr double kDefaultThresholdTolerance = 1e-6;

// Keep-mask: 1 where beta <= xi, 0 where beta > xi.
BinaryMask bin(const Tensor& beta, double xi);

struct ThresholdResult {
  double t = 0.0;
  BinaryMask keep_mask;  // == bin(beta, t)
  std::size_t queries_spent = 0;
  // Decision last observed for keep_mask (the fit's label if never queried).
  Label adversarial_label = 0;
  // Some pair of observations contradicted monotonicity in xi.
  bool monotonicity_violation = false;
};

// Bisects xi over [min(beta) - tol, max(beta)]. The low end (nothing kept) is
// non-adversarial and the high end (everything kept) is adversarial by
// precondition; t is the upper end of the final bracket. Midpoints whose
// keep-mask coincides with an endpoint's mask reuse that endpoint's decision
// instead of querying. If the channel runs dry the current upper end is
// returned.
ThresholdResult threshold_search(QueryChannel& channel, const Tensor& x0,
                                 const BoundaryFit& fit, const Tensor& beta,
                                 double tol = kDefaultThresholdTolerance);

// Upper bound on threshold_search queries for a beta range.
std::size_t threshold_query_bound(double beta_range, double tol);

// lambda0 · (theta0 ∘ keep). Throws ParameterError on an all-zero mask.
Tensor finalize_delta(const BoundaryFit& fit, const ThresholdResult& result);

}  // namespace hlsa

#endif  // HLSA_SPARSIFY_HPP
