#include "hlsa/signopt.hpp"

#include <cmath>
#include <limits>

namespace hlsa {

namespace {

// Search state kept outside the call so a caller that catches
// BudgetExhausted can still use a bracket that was already established.
struct SearchState {
  bool found = false;  // state.lambda has been observed adversarial
  BoundaryBracket bracket;
};

bool probe(QueryChannel& channel, const Tensor& x0, double lambda,
           const Tensor& unit, Label& label) {
  label = channel.decide(along(x0, lambda, unit));
  return channel.criterion().is_adversarial(label);
}

void bisect(QueryChannel& channel, const Tensor& x0, const Tensor& unit,
            double tol, SearchState& s) {
  while (s.bracket.lambda - s.bracket.lower > tol) {
    double mid = 0.5 * (s.bracket.lambda + s.bracket.lower);
    if (mid <= s.bracket.lower || mid >= s.bracket.lambda) break;  // no representable midpoint
    Label label;
    if (probe(channel, x0, mid, unit, label)) {
      s.bracket.lambda = mid;
      s.bracket.label = label;
    } else {
      s.bracket.lower = mid;
    }
  }
}

void search_outward(QueryChannel& channel, const Tensor& x0, const Tensor& unit,
                    double tol, Norm norm, SearchState& s) {
  const double cap = 10.0 * hlsa::norm(x0, norm) + 10.0;
  double lambda = 0.1 * linf(x0) + 0.1;
  double lower = 0.0;
  while (true) {
    lambda = std::min(lambda, cap);
    Label label;
    if (probe(channel, x0, lambda, unit, label)) {
      s.found = true;
      s.bracket = BoundaryBracket{lambda, lower, label};
      break;
    }
    if (lambda >= cap) return;
    lower = lambda;
    lambda *= 2.0;
  }
  bisect(channel, x0, unit, tol, s);
}

void search_below(QueryChannel& channel, const Tensor& x0, const Tensor& unit,
                  double bound, double tol, SearchState& s) {
  Label label;
  if (!probe(channel, x0, bound, unit, label)) return;
  s.found = true;
  s.bracket = BoundaryBracket{bound, 0.0, label};
  bisect(channel, x0, unit, tol, s);
}

BoundaryFit make_fit(Tensor unit, const BoundaryBracket& b, std::size_t spent) {
  BoundaryFit fit;
  fit.theta0 = std::move(unit);
  fit.lambda0 = b.lambda;
  fit.adversarial_label = b.label;
  fit.queries_spent = spent;
  return fit;
}

bool is_zero(const Tensor& t) { return linf(t) == 0.0; }

}  // namespace

void SignOptConfig::validate() const {
  if (probe_count < 1) throw ParameterError("probe_count must be >= 1");
  if (!(epsilon_smooth > 0.0)) throw ParameterError("epsilon_smooth must be > 0");
  if (!(eta0 > 0.0)) throw ParameterError("eta0 must be > 0");
  if (num_init_directions < 1) {
    throw ParameterError("num_init_directions must be >= 1");
  }
  if (!(lambda_tolerance > 0.0)) {
    throw ParameterError("lambda_tolerance must be > 0");
  }
  if (norm == Norm::kL0) throw ParameterError("signopt supports l2 and linf only");
}

std::optional<BoundaryBracket> g_eval(QueryChannel& channel, const Tensor& x0,
                                      const Tensor& theta, double tol, Norm norm) {
  const Tensor unit = normalized(theta, norm);
  SearchState s;
  search_outward(channel, x0, unit, tol, norm, s);
  if (!s.found) return std::nullopt;
  return s.bracket;
}

std::optional<BoundaryBracket> g_eval_below(QueryChannel& channel,
                                            const Tensor& x0,
                                            const Tensor& theta, double bound,
                                            double tol, Norm norm) {
  const Tensor unit = normalized(theta, norm);
  SearchState s;
  search_below(channel, x0, unit, bound, tol, s);
  if (!s.found) return std::nullopt;
  return s.bracket;
}

BoundaryFit initial_direction_search(QueryChannel& channel, const Tensor& x0,
                                     const SignOptConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t start = channel.spent();
  std::optional<BoundaryFit> best;
  try {
    for (std::size_t i = 0; i < cfg.num_init_directions; ++i) {
      Tensor theta = (i == 0 && cfg.target_exemplar)
                         ? subtract(*cfg.target_exemplar, x0)
                         : sample_gaussian_direction(rng, x0.shape());
      if (is_zero(theta)) continue;
      Tensor unit = normalized(theta, cfg.norm);
      SearchState s;
      try {
        if (best) {
          search_below(channel, x0, unit, best->lambda0, cfg.lambda_tolerance, s);
        } else {
          search_outward(channel, x0, unit, cfg.lambda_tolerance, cfg.norm, s);
        }
      } catch (const BudgetExhausted&) {
        // A partially bisected bracket is still a verified adversarial point.
        if (s.found && (!best || s.bracket.lambda < best->lambda0)) {
          best = make_fit(std::move(unit), s.bracket, 0);
        }
        throw;
      }
      if (s.found && (!best || s.bracket.lambda < best->lambda0)) {
        best = make_fit(std::move(unit), s.bracket, 0);
      }
    }
  } catch (const BudgetExhausted&) {
    if (!best) throw InitFailure("query budget ran out before any direction reached the boundary");
  }
  if (!best) {
    throw InitFailure("none of " + std::to_string(cfg.num_init_directions) +
                      " initial directions reached the boundary");
  }
  best->queries_spent = channel.spent() - start;
  return *best;
}

Tensor sign_grad_estimate(QueryChannel& channel, const Tensor& x0,
                          const Tensor& theta, double g_theta,
                          std::size_t probe_count, double epsilon_smooth,
                          Norm norm, Rng& rng) {
  Tensor grad(theta.shape());
  for (std::size_t q = 0; q < probe_count; ++q) {
    Tensor mu = sample_gaussian_direction(rng, theta.shape());
    Tensor perturbed = along(theta, epsilon_smooth, mu);
    if (is_zero(perturbed)) continue;
    Tensor unit = normalized(perturbed, norm);
    const double sign =
        channel.is_adversarial(along(x0, g_theta, unit)) ? -1.0 : 1.0;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += sign * mu[i];
  }
  return grad;
}

BoundaryFit signopt_descend(QueryChannel& channel, const Tensor& x0,
                            const SignOptConfig& cfg, Rng& rng) {
  const std::size_t start = channel.spent();
  BoundaryFit fit = initial_direction_search(channel, x0, cfg, rng);
  constexpr int kMaxHalvings = 15;
  double epsilon = cfg.epsilon_smooth;
  int failures = 0;
  try {
    while (failures < 2) {
      Tensor grad = sign_grad_estimate(channel, x0, fit.theta0, fit.lambda0,
                                       cfg.probe_count, epsilon, cfg.norm, rng);
      bool improved = false;
      double eta = cfg.eta0;
      for (int k = 0; k <= kMaxHalvings && !improved; ++k, eta *= 0.5) {
        Tensor candidate = along(fit.theta0, -eta, grad);
        if (is_zero(candidate)) continue;
        Tensor unit = normalized(candidate, cfg.norm);
        SearchState s;
        search_below(channel, x0, unit, fit.lambda0, cfg.lambda_tolerance, s);
        if (s.found && s.bracket.lambda < fit.lambda0) {
          fit.theta0 = std::move(unit);
          fit.lambda0 = s.bracket.lambda;
          fit.adversarial_label = s.bracket.label;
          improved = true;
        }
      }
      if (improved) {
        failures = 0;
      } else {
        ++failures;
        epsilon *= 0.5;
      }
    }
  } catch (const BudgetExhausted&) {
    // Keep the best accepted fit.
  }
  fit.queries_spent = channel.spent() - start;
  return fit;
}

}  // namespace hlsa
