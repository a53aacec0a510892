#include "hlsa/oracle.hpp"

#include <algorithm>

namespace hlsa {

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::kBaseline:
      return "baseline";
    case Phase::kUnimportance:
      return "unimportance";
    case Phase::kThreshold:
      return "threshold";
    case Phase::kVerification:
      return "verification";
  }
  return "?";
}

Label ClippedOracle::decide(const Tensor& x) const {
  return x.in_unit_box() ? inner_.decide(x) : inner_.decide(clip_unit(x));
}

QueryLedger::QueryLedger(std::size_t cap) : cap_(cap) {
  if (cap == 0) throw ParameterError("query cap must be positive");
}

void QueryLedger::charge(Phase phase) {
  if (used_ >= cap_) throw BudgetExhausted(phase);
  ++used_;
  ++tallies_[static_cast<std::size_t>(phase)];
}

Label decide_counted(const Oracle& oracle, QueryLedger& ledger, Phase phase,
                     const Tensor& x) {
  ledger.charge(phase);
  return oracle.decide(x);
}

QueryChannel::QueryChannel(const Oracle& oracle, QueryLedger& ledger,
                           Phase phase, AdversarialCriterion criterion,
                           std::optional<std::size_t> phase_limit)
    : oracle_(oracle),
      ledger_(ledger),
      phase_(phase),
      criterion_(criterion),
      limit_(phase_limit) {}

std::size_t QueryChannel::available() const {
  std::size_t left = ledger_.remaining();
  if (limit_) left = std::min(left, *limit_ > spent_ ? *limit_ - spent_ : 0);
  return left;
}

Label QueryChannel::decide(const Tensor& x) {
  if (limit_ && spent_ >= *limit_) throw BudgetExhausted(phase_);
  Label label = decide_counted(oracle_, ledger_, phase_, x);
  ++spent_;
  return label;
}

}  // namespace hlsa
