#include <doctest.h>

#include <atomic>
#include <cmath>
#include <optional>

#include "generators.hpp"
#include "hlsa/oracle.hpp"
#include "hlsa/synthetic_oracles.hpp"

using namespace hlsa;

namespace {

// Walks x + t·u forward in steps of `step` from `from` and returns the first
// t whose decision differs from the one at x. nullopt past `limit`.
std::optional<double> line_scan(const Oracle& o, const Tensor& x, const Tensor& u,
                                double from, double step, double limit) {
  const Label start = o.decide(x);
  for (double t = from; t <= limit; t += step) {
    if (o.decide(along(x, t, u)) != start) return t;
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("decide_counted charges the named phase") {
  HyperplaneOracle o(Tensor::vector({1, 0}), -0.5);
  QueryLedger ledger(10);
  CHECK(decide_counted(o, ledger, Phase::kBaseline, Tensor::vector({0, 0})) == 0);
  CHECK(ledger.used() == 1);
  CHECK(decide_counted(o, ledger, Phase::kThreshold, Tensor::vector({1, 0})) == 1);
  CHECK(ledger.used() == 2);
  CHECK(ledger.tally(Phase::kBaseline) == 1);
  CHECK(ledger.tally(Phase::kThreshold) == 1);
  CHECK(ledger.tally(Phase::kUnimportance) == 0);
}

TEST_CASE("the ledger cap is hard") {
  HyperplaneOracle o(Tensor::vector({1, 0}), -0.5);
  QueryLedger ledger(1);
  decide_counted(o, ledger, Phase::kBaseline, Tensor::vector({0, 0}));
  CHECK_THROWS_AS(decide_counted(o, ledger, Phase::kUnimportance, Tensor::vector({0, 0})),
                  BudgetExhausted);
  CHECK(ledger.used() == 1);
  CHECK_THROWS_AS(QueryLedger(0), ParameterError);
}

TEST_CASE("budget exhaustion names the phase") {
  HyperplaneOracle o(Tensor::vector({1}), -0.5);
  QueryLedger ledger(1);
  decide_counted(o, ledger, Phase::kBaseline, Tensor::vector({0}));
  try {
    decide_counted(o, ledger, Phase::kThreshold, Tensor::vector({0}));
    FAIL("expected BudgetExhausted");
  } catch (const BudgetExhausted& e) {
    CHECK(e.phase() == Phase::kThreshold);
  }
}

TEST_CASE("property: used equals the sum of phase tallies") {
  HyperplaneOracle o(Tensor::vector({1, 1}), 0.0);
  Rng rng(4);
  for (int round = 0; round < 50; ++round) {
    const std::size_t cap = rng.uniform_index(1, 40);
    QueryLedger ledger(cap);
    std::size_t calls = 0;
    try {
      for (;;) {
        decide_counted(o, ledger, static_cast<Phase>(rng.uniform_index(0, kPhaseCount - 1)),
                       Tensor::vector({rng.normal(), rng.normal()}));
        ++calls;
      }
    } catch (const BudgetExhausted&) {
    }
    std::size_t sum = 0;
    for (std::size_t p = 0; p < kPhaseCount; ++p) sum += ledger.tally(static_cast<Phase>(p));
    CHECK(calls == cap);
    CHECK(ledger.used() == cap);
    CHECK(sum == ledger.used());
  }
}

TEST_CASE("query channel enforces its own limit on top of the cap") {
  HyperplaneOracle o(Tensor::vector({1}), -0.5);
  QueryLedger ledger(10);
  QueryChannel ch(o, ledger, Phase::kUnimportance, AdversarialCriterion{0, {}}, 3);
  CHECK(ch.available() == 3);
  CHECK(ch.is_adversarial(Tensor::vector({1})));
  CHECK_FALSE(ch.is_adversarial(Tensor::vector({0})));
  ch.decide(Tensor::vector({0}));
  CHECK(ch.spent() == 3);
  CHECK(ch.available() == 0);
  CHECK_THROWS_AS(ch.decide(Tensor::vector({0})), BudgetExhausted);
  CHECK(ledger.used() == 3);
  QueryChannel rest(o, ledger, Phase::kThreshold, AdversarialCriterion{0, {}});
  CHECK(rest.available() == 7);
}

TEST_CASE("adversarial criterion") {
  const AdversarialCriterion untargeted{3, {}};
  CHECK(untargeted.is_adversarial(0));
  CHECK_FALSE(untargeted.is_adversarial(3));
  const AdversarialCriterion targeted{3, 5};
  CHECK(targeted.is_adversarial(5));
  CHECK_FALSE(targeted.is_adversarial(0));
}

TEST_CASE("hyperplane oracle analytic companions") {
  Tensor w(Shape{1, 1, 4});
  w[0] = 1;
  HyperplaneOracle o(w, -0.5);
  const Tensor origin(Shape{1, 1, 4});
  Tensor u(Shape{1, 1, 4});
  u[0] = 1;
  CHECK(*o.boundary_distance(origin, u) == doctest::Approx(0.5));
  Tensor v(Shape{1, 1, 4});
  v[1] = 1;
  CHECK_FALSE(o.boundary_distance(origin, v).has_value());
  CHECK(o.l2_distance(origin) == doctest::Approx(0.5));
  CHECK_THROWS_AS(HyperplaneOracle(Tensor(Shape{1, 1, 2}), 1.0), ParameterError);
}

TEST_CASE("hyperplane analytic distance matches a line scan") {
  Rng rng(17);
  int compared = 0;
  for (int round = 0; round < 1000; ++round) {
    const auto hc = testgen::random_hyperplane(rng, 5);
    HyperplaneOracle o(hc.w, hc.b);
    Tensor u = normalized(sample_gaussian_direction(rng, Shape{1, 1, 5}), Norm::kL2);
    if (dot(hc.w, u) < 0) u = along(Tensor(u.shape()), -1.0, u);
    const auto analytic = o.boundary_distance(hc.x0, u);
    if (!analytic || *analytic > 20) continue;
    // Coarse scan to bracket, then a fine scan at step 1e-5 inside it.
    const auto coarse = line_scan(o, hc.x0, u, 0.0, 1e-2, 25.0);
    REQUIRE(coarse.has_value());
    const auto fine = line_scan(o, hc.x0, u, std::max(0.0, *coarse - 1e-2), 1e-5, *coarse);
    REQUIRE(fine.has_value());
    CHECK(std::abs(*fine - *analytic) <= 1e-4);
    ++compared;
  }
  CHECK(compared > 900);
}

TEST_CASE("sphere oracle") {
  SphereOracle o(Tensor::vector({0, 0}), 1.0);
  CHECK(o.decide(Tensor::vector({0, 0})) == 1);
  CHECK(o.decide(Tensor::vector({1, 0})) == 0);
  CHECK(o.min_escape(Tensor::vector({0, 0})) == 1.0);
  CHECK(o.min_escape(Tensor::vector({0.3, 0})) == doctest::Approx(0.7));
  CHECK_THROWS_AS(SphereOracle(Tensor::vector({0}), 0.0), ParameterError);
}

TEST_CASE("mask logic oracle") {
  const Shape s{1, 1, 2};
  const MaskLogicOracle o(s, {0});
  const Tensor theta = Tensor::vector({0.7, -0.2});
  const Tensor x0(s);
  CHECK(o.decide(along_masked(x0, 1.0, theta, BinaryMask(s, {1, 0}))) == 1);
  CHECK(o.decide(along_masked(x0, 1.0, theta, BinaryMask(s, {0, 1}))) == 0);
  const Shape s4{1, 1, 4};
  const MaskLogicOracle o2(s4, {0, 3});
  CHECK(o2.decide(Tensor::vector({1, 1, 1, 1})) == 1);
  CHECK(o2.decide(Tensor::vector({1, 1, 1, 0})) == 0);
  CHECK_THROWS_AS(MaskLogicOracle(s, {}), ParameterError);
  CHECK_THROWS_AS(MaskLogicOracle(s, {2}), ParameterError);
}

TEST_CASE("clipped view clamps before deciding") {
  // Class 1 iff x0 > 1.5, which no clamped input can reach.
  HyperplaneOracle raw(Tensor::vector({1}), -1.5);
  ClippedOracle clipped(raw);
  CHECK(raw.decide(Tensor::vector({2})) == 1);
  CHECK(clipped.decide(Tensor::vector({2})) == 0);
  SphereOracle s(Tensor::vector({0.5, 0.5}), 0.1);
  ClippedOracle cs(s);
  CHECK(cs.decide(Tensor::vector({0.5, 0.5})) == 1);
  CHECK(cs.num_classes() == 2);
  CHECK(cs.input_shape() == s.input_shape());
}
