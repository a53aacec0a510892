#ifndef HLSA_ORACLE_HPP
#define HLSA_ORACLE_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "hlsa/tensor.hpp"

namespace hlsa {

using Label = std::int32_t;

// Hard-label classifier: only the top-1 class is observable. Implementations
// must be deterministic and safe to call concurrently once constructed.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual Label decide(const Tensor& x) const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual Shape input_shape() const = 0;
};

// Clamps every input to [0,1] before deferring to the wrapped oracle, so an
// attack can only observe images that exist in the valid pixel range.
class ClippedOracle : public Oracle {
 public:
  explicit ClippedOracle(const Oracle& inner) : inner_(inner) {}
  Label decide(const Tensor& x) const override;
  std::size_t num_classes() const override { return inner_.num_classes(); }
  Shape input_shape() const override { return inner_.input_shape(); }

 private:
  const Oracle& inner_;
};

enum class Phase : std::size_t {
  kBaseline = 0,
  kUnimportance = 1,
  kThreshold = 2,
  kVerification = 3,
};
inline constexpr std::size_t kPhaseCount = 4;

const char* to_string(Phase phase);

class BudgetExhausted : public std::runtime_error {
 public:
  explicit BudgetExhausted(Phase phase)
      : std::runtime_error(std::string("query budget exhausted in phase ") +
                           to_string(phase)),
        phase_(phase) {}
  Phase phase() const { return phase_; }

 private:
  Phase phase_;
};

// Per-attack query accounting. used() always equals the sum of the phase
// tallies and never exceeds cap().
class QueryLedger {
 public:
  explicit QueryLedger(std::size_t cap);

  std::size_t cap() const { return cap_; }
  std::size_t used() const { return used_; }
  std::size_t remaining() const { return cap_ - used_; }
  std::size_t tally(Phase phase) const {
    return tallies_[static_cast<std::size_t>(phase)];
  }

  // Records one query; throws BudgetExhausted when the cap is reached.
  void charge(Phase phase);

 private:
  std::size_t cap_;
  std::size_t used_ = 0;
  std::array<std::size_t, kPhaseCount> tallies_{};
};

// decide() through a ledger: one decision, one charge.
Label decide_counted(const Oracle& oracle, QueryLedger& ledger, Phase phase,
                     const Tensor& x);

// Untargeted: anything but the clean label. Targeted: exactly the target.
struct AdversarialCriterion {
  Label clean_label = 0;
  std::optional<Label> target;

  bool is_adversarial(Label decided) const {
    return target ? decided == *target : decided != clean_label;
  }
};

// A phase's view of the oracle: counts every query against the shared ledger
// and enforces an optional phase-local limit on top of the global cap.
class QueryChannel {
 public:
  QueryChannel(const Oracle& oracle, QueryLedger& ledger, Phase phase,
               AdversarialCriterion criterion,
               std::optional<std::size_t> phase_limit = std::nullopt);

  Label decide(const Tensor& x);
  bool is_adversarial(const Tensor& x) {
    return criterion_.is_adversarial(decide(x));
  }

  const AdversarialCriterion& criterion() const { return criterion_; }
  const Oracle& oracle() const { return oracle_; }
  QueryLedger& ledger() { return ledger_; }
  Phase phase() const { return phase_; }
  // Queries this channel has issued.
  std::size_t spent() const { return spent_; }
  // Queries this channel may still issue.
  std::size_t available() const;

 private:
  const Oracle& oracle_;
  QueryLedger& ledger_;
  Phase phase_;
  AdversarialCriterion criterion_;
  std::optional<std::size_t> limit_;
  std::size_t spent_ = 0;
};

}  // namespace hlsa

#endif  // HLSA_ORACLE_HPP
