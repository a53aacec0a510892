#ifndef HLSA_TESTS_REFERENCE_UNIMPORTANCE_HPP
#define HLSA_TESTS_REFERENCE_UNIMPORTANCE_HPP

// Line-by-line transcription of the unimportance procedure on plain vectors.
// Shares only the oracle and the zero-mask sampler with the library, so the
// random stream is identical and everything else is independent.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hlsa/oracle.hpp"
#include "hlsa/rng.hpp"
#include "hlsa/tensor.hpp"

namespace reference {

inline std::vector<double> unimportance(const hlsa::Oracle& oracle, hlsa::Label y0,
                                const hlsa::Tensor& x0, const hlsa::Tensor& theta0,
                                double lambda0, std::size_t p, std::size_t trials,
                                hlsa::Rng& rng) {
  const std::size_t m = x0.size();
  std::vector<std::vector<int>> sp, sn;
  std::vector<double> lp, ln;
  for (std::size_t i = 0; i < trials; ++i) {
    const hlsa::BinaryMask omega = hlsa::sample_zero_mask(rng, x0.shape(), p);
    std::vector<double> theta_star(m), gamma(m);
    std::vector<int> r(m);
    for (std::size_t k = 0; k < m; ++k) {
      theta_star[k] = theta0[k] * omega[k];
      r[k] = 1 - omega[k];
      gamma[k] = r[k] * theta0[k];
    }
    hlsa::Tensor probe(x0.shape());
    for (std::size_t k = 0; k < m; ++k) probe[k] = x0[k] + lambda0 * theta_star[k];
    double sq = 0.0;
    for (double g : gamma) sq += g * g;
    if (oracle.decide(probe) != y0) {
      sp.push_back(r);
      lp.push_back(std::sqrt(sq));
    } else {
      for (int& v : r) v = -v;
      sn.push_back(r);
      ln.push_back(-std::sqrt(sq));
    }
  }
  auto rescale = [](std::vector<double>& v) {
    if (v.empty()) return;
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    for (double& x : v) x = hi == lo ? 1.0 : (x - lo) / (hi - lo);
  };
  for (double& x : ln) x = -x;
  rescale(lp);
  rescale(ln);
  std::vector<double> beta(m, 0.0);
  for (std::size_t l = 0; l < sp.size(); ++l) {
    for (std::size_t k = 0; k < m; ++k) beta[k] += lp[l] * sp[l][k];
  }
  for (std::size_t h = 0; h < sn.size(); ++h) {
    for (std::size_t k = 0; k < m; ++k) beta[k] += ln[h] * sn[h][k];
  }
  return beta;
}

}  // namespace reference

#endif  // HLSA_TESTS_REFERENCE_UNIMPORTANCE_HPP
