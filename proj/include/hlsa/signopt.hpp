#ifndef HLSA_SIGNOPT_HPP
#define HLSA_SIGNOPT_HPP

#include <optional>
#include <stdexcept>

#include "hlsa/oracle.hpp"
#include "hlsa/rng.hpp"
#include "hlsa/tensor.hpp"

namespace hlsa {

// No direction out of the initial random set reached the decision boundary.
class InitFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SignOptConfig {
  // Random probes per sign-gradient estimate.
  std::size_t probe_count = 200;
  // Smoothing applied to each probe direction.
  double epsilon_smooth = 0.001;
  // First step size tried by the line search.
  double eta0 = 0.2;
  std::size_t num_init_directions = 100;
  double lambda_tolerance = 1e-5;
  Norm norm = Norm::kL2;
  // Targeted mode: optional image of the target class; the first initial
  // direction points from x0 toward it.
  std::optional<Tensor> target_exemplar;

  void validate() const;
};

struct BoundaryFit {
  Tensor theta0;  // unit norm under the active norm
  double lambda0 = 0.0;
  std::size_t queries_spent = 0;
  // Decision observed at x0 + lambda0·theta0 when lambda0 was bracketed.
  Label adversarial_label = 0;
};

// Final bracket of a boundary search along a unit direction: the point at
// `lambda` was observed adversarial, the point at `lower` was not (lower may
// be 0, i.e. x0 itself).
struct BoundaryBracket {
  double lambda = 0.0;
  double lower = 0.0;
  Label label = 0;
};

// Distance g(theta) from x0 to the adversarial region along theta/‖theta‖,
// bracketed to `tol`. Searches outward by doubling from 0.1·‖x0‖∞ + 0.1 up to
// 10·‖x0‖ + 10, then bisects. nullopt when nothing adversarial is found
// below the cap.
std::optional<BoundaryBracket> g_eval(QueryChannel& channel, const Tensor& x0,
                                      const Tensor& theta, double tol, Norm norm);

// Like g_eval, but only succeeds when g(theta) <= bound: one query at the
// bound decides, then bisection over [0, bound]. nullopt means g(theta) > bound.
std::optional<BoundaryBracket> g_eval_below(QueryChannel& channel,
                                            const Tensor& x0,
                                            const Tensor& theta, double bound,
                                            double tol, Norm norm);

// Best of cfg.num_init_directions random directions (smallest g).
BoundaryFit initial_direction_search(QueryChannel& channel, const Tensor& x0,
                                     const SignOptConfig& cfg, Rng& rng);

// Sum over probes of sign_q·mu_q, where sign_q is -1 when the probe point
// x0 + g_theta·unit(theta + eps·mu_q) is adversarial and +1 otherwise.
// One query per probe.
Tensor sign_grad_estimate(QueryChannel& channel, const Tensor& x0,
                          const Tensor& theta, double g_theta,
                          std::size_t probe_count, double epsilon_smooth,
                          Norm norm, Rng& rng);

// Initial search followed by sign-gradient descent until the channel's
// budget runs out or the line search fails twice in a row.
BoundaryFit signopt_descend(QueryChannel& channel, const Tensor& x0,
                            const SignOptConfig& cfg, Rng& rng);

}  // namespace hlsa

#endif  // HLSA_SIGNOPT_HPP
