#include "hlsa/sparsify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hlsa {

BinaryMask bin(const Tensor& beta, double xi) {
  BinaryMask mask(beta.shape(), 0);
  for (std::size_t i = 0; i < beta.size(); ++i) mask.set(i, beta[i] <= xi);
  return mask;
}

std::size_t threshold_query_bound(double beta_range, double tol) {
  if (!(beta_range > tol)) return 2;
  return static_cast<std::size_t>(std::ceil(std::log2(beta_range / tol))) + 2;
}

ThresholdResult threshold_search(QueryChannel& channel, const Tensor& x0,
                                 const BoundaryFit& fit, const Tensor& beta,
                                 double tol) {
  if (!(tol > 0.0)) throw ParameterError("threshold tolerance must be > 0");
  require_same_shape(beta.shape(), x0.shape(), "threshold_search");
  auto [min_it, max_it] = std::minmax_element(beta.data().begin(), beta.data().end());
  double lo = *min_it - tol;
  double hi = *max_it;
  BinaryMask lo_mask = bin(beta, lo);
  BinaryMask hi_mask = bin(beta, hi);

  const std::size_t start = channel.spent();
  // Largest xi seen non-adversarial and smallest seen adversarial, including
  // the two endpoint facts.
  double max_clean_xi = lo;
  double min_adv_xi = hi;
  Label hi_label = fit.adversarial_label;

  try {
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      BinaryMask mask = bin(beta, mid);
      bool adversarial;
      Label label = hi_label;
      if (mask == hi_mask) {
        adversarial = true;
      } else if (mask == lo_mask) {
        adversarial = false;
      } else {
        label = channel.decide(along_masked(x0, fit.lambda0, fit.theta0, mask));
        adversarial = channel.criterion().is_adversarial(label);
      }
      if (adversarial) {
        hi = mid;
        hi_label = label;
        hi_mask = std::move(mask);
        min_adv_xi = std::min(min_adv_xi, mid);
      } else {
        lo = mid;
        lo_mask = std::move(mask);
        max_clean_xi = std::max(max_clean_xi, mid);
      }
    }
  } catch (const BudgetExhausted&) {
    // hi is still a verified adversarial threshold.
  }

  ThresholdResult out;
  out.t = hi;
  out.keep_mask = std::move(hi_mask);
  out.queries_spent = channel.spent() - start;
  out.adversarial_label = hi_label;
  out.monotonicity_violation = !(max_clean_xi < min_adv_xi);
  return out;
}

Tensor finalize_delta(const BoundaryFit& fit, const ThresholdResult& result) {
  if (result.keep_mask.count_ones() == 0) {
    throw ParameterError("keep mask is empty; the perturbation would vanish");
  }
  return along_masked(Tensor(fit.theta0.shape()), fit.lambda0, fit.theta0,
                      result.keep_mask);
}

}  // namespace hlsa
