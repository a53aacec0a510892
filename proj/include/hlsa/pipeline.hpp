#ifndef HLSA_PIPELINE_HPP
#define HLSA_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "hlsa/oracle.hpp"
#include "hlsa/signopt.hpp"
#include "hlsa/sparsify.hpp"
#include "hlsa/tensor.hpp"

namespace hlsa {

enum class DatasetProfile { kMnist, kCifar10, kImagenet, kCustom };

DatasetProfile parse_profile(const std::string& text);
std::string to_string(DatasetProfile profile);
// Success threshold on the perturbation's L2 norm used when reporting SR.
double default_success_epsilon(DatasetProfile profile);

struct AttackConfig {
  std::size_t total_budget = 0;     // Q
  std::size_t baseline_budget = 0;  // N
  std::size_t p = 0;                // zeros per unimportance trial
  Norm norm = Norm::kL2;
  std::optional<Label> target;  // targeted mode when set
  std::uint64_t seed = 0;
  SignOptConfig signopt;
  double threshold_tol = kDefaultThresholdTolerance;
  // Queries see clip(x, 0, 1) and the reported delta is clip(x0 + delta) − x0.
  bool clip = true;

  // Throws ParameterError on 0 < N <= Q or 1 <= p <= dimension violations.
  void validate(std::size_t dimension) const;
};

// Q = 4000, N = floor(3Q/4), p = 10 (mnist, cifar10) or 500 (imagenet).
// The custom profile has no defaults and throws ParameterError.
AttackConfig default_config(DatasetProfile profile);

enum class AttackStatus { kSuccess, kFailure, kSkipped };
const char* to_string(AttackStatus status);
AttackStatus parse_status(const std::string& text);

struct AttackRecord {
  std::string cell_id;  // set by the experiment harness
  std::string image_id;
  Label clean_label = 0;
  AttackStatus status = AttackStatus::kFailure;
  std::string reason;  // empty on success
  Norm norm = Norm::kL2;
  std::optional<Label> target;
  Label adversarial_label = -1;

  std::size_t dimension = 0;  // M
  Tensor delta;               // post-clip when clipping is enabled
  // Norms of delta; initial_* describe lambda0·theta0 after the same clip.
  double l0 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double pp = 0.0;  // 100·(M − l0)/M

  double lambda0 = 0.0;
  double initial_l0 = 0.0;  // of lambda0·theta0
  double initial_l2 = 0.0;

  std::size_t budget = 0;
  std::size_t baseline_budget = 0;
  std::size_t p = 0;
  std::size_t trials = 0;
  std::size_t queries_baseline = 0;
  std::size_t queries_unimportance = 0;
  std::size_t queries_threshold = 0;
  std::size_t queries_verification = 0;
  std::size_t queries_total = 0;

  double t = 0.0;
  bool monotonicity_violation = false;
  bool clipped = false;
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;

  bool success() const { return status == AttackStatus::kSuccess; }
};

// Optional diagnostics filled by attack().
struct AttackTrace {
  std::optional<BoundaryFit> fit;
  std::optional<Tensor> beta;
};

// Runs the three phases within cfg.total_budget queries. The check that the
// clean image is classified as y0 happens before the ledger opens; a
// misclassified image yields a skipped record.
AttackRecord attack(const Oracle& oracle, const Tensor& x0, Label y0,
                    const AttackConfig& cfg, const std::string& image_id = "",
                    AttackTrace* trace = nullptr);

// Queries held back from the unimportance phase for threshold search and
// the final verification query.
std::size_t threshold_reserve(const AttackConfig& cfg);

}  // namespace hlsa

#endif  // HLSA_PIPELINE_HPP
