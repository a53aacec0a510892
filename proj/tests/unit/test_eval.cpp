#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "hlsa/eval.hpp"
#include "hlsa/report.hpp"

using namespace hlsa;
namespace fs = std::filesystem;

namespace {

AttackRecord record_with(std::vector<double> delta, AttackStatus status = AttackStatus::kSuccess) {
  AttackRecord r;
  r.status = status;
  r.delta = Tensor::vector(std::move(delta));
  r.dimension = r.delta.size();
  r.l0 = l0(r.delta);
  r.l2 = l2(r.delta);
  r.linf = linf(r.delta);
  r.pp = pp(r);
  r.initial_l0 = static_cast<double>(r.dimension);
  r.initial_l2 = r.l2 + 1.0;
  r.budget = 100;
  r.baseline_budget = 50;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hlsa_test_eval_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentSpec parse(const std::string& text) {
  std::istringstream in(text);
  return parse_experiment_spec(in);
}

std::string hyperplane_spec(const fs::path& out) {
  return "oracle = hyperplane\ndim = 20\nsupport = 4\nsamples = 10\noracle_seed = 3\n"
         "cells = 300:200:2, 300:250:2, 300:300:2\nepsilon = 2\nseed = 5\noutput = " +
         out.string() + "\n";
}

}  // namespace

TEST_CASE("success rate examples") {
  std::vector<AttackRecord> rs{record_with({1.0, 0.0}), record_with({2.0, 0.0})};
  CHECK(*success_rate(rs, 1.5, Norm::kL2) == 50.0);
  CHECK(*success_rate(rs, INFINITY, Norm::kL2) == 100.0);
  for (auto& r : rs) r.status = AttackStatus::kFailure;
  CHECK(*success_rate(rs, 1.5, Norm::kL2) == 0.0);
  CHECK_FALSE(success_rate({}, 1.5, Norm::kL2).has_value());
}

TEST_CASE("skipped records leave the denominator") {
  std::vector<AttackRecord> rs{record_with({1.0}), record_with({0.0}, AttackStatus::kSkipped)};
  CHECK(*success_rate(rs, 1.5, Norm::kL2) == 100.0);
}

TEST_CASE("median examples") {
  CHECK(*median({1, 2, 3}) == 2.0);
  CHECK(*median({4, 1, 3, 2}) == 2.5);
  CHECK(*median({7}) == 7.0);
  CHECK_FALSE(median({}).has_value());
  std::vector<AttackRecord> rs{record_with({3.0}), record_with({1.0}),
                               record_with({9.0}, AttackStatus::kFailure)};
  CHECK(*median_norm(rs, Norm::kL2) == 2.0);
  CHECK(*median_norm(rs, Norm::kL2, false) == 3.0);
}

TEST_CASE("pp examples") {
  std::vector<double> d(784, 0.0);
  for (std::size_t i = 0; i < 417; ++i) d[i] = 0.01;
  CHECK(pp(record_with(d)) == doctest::Approx(46.81).epsilon(1e-4));
  CHECK(pp(record_with({0, 0, 0})) == 100.0);
  CHECK(pp(record_with({1, 2, 3})) == 0.0);
}

TEST_CASE("jsonl round trip is exact") {
  AttackRecord r = record_with({0.0, 0.1 + 0.2, -1.0 / 3.0, 0.0});
  r.cell_id = "Q300_N200_p2";
  r.image_id = "7";
  r.target = 4;
  r.lambda0 = 1.0 / 7.0;
  r.t = -0.12345678901234567;
  r.queries_baseline = 40;
  r.queries_verification = 1;
  r.queries_total = 41;
  r.seed = 18446744073709551615ull;
  const std::string line = record_to_jsonl(r);
  CHECK(line.find('\n') == std::string::npos);
  const AttackRecord back = record_from_jsonl(line);
  CHECK(back.delta == r.delta);
  CHECK(back.lambda0 == r.lambda0);
  CHECK(back.t == r.t);
  CHECK(back.seed == r.seed);
  CHECK(back.target == r.target);
  CHECK(record_to_jsonl(back) == line);
}

TEST_CASE("validate_record catches broken invariants") {
  AttackRecord good = record_with({0.5, 0.0});
  CHECK_NOTHROW(validate_record(good));
  AttackRecord r = good;
  r.pp = 10;
  CHECK_THROWS_AS(validate_record(r), std::runtime_error);
  r = good;
  r.queries_threshold = 3;
  CHECK_THROWS_AS(validate_record(r), std::runtime_error);
  r = good;
  r.initial_l2 = r.l2 / 2;
  CHECK_THROWS_AS(validate_record(r), std::runtime_error);
  r = good;
  r.queries_total = r.queries_baseline = 101;
  CHECK_THROWS_AS(validate_record(r), std::runtime_error);
}

TEST_CASE("spec parser reports the offending line") {
  const auto message = [](const std::string& text) {
    try {
      parse(text);
    } catch (const ParameterError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("oracle = sphere\n# c\nbogus = 1\n").find("spec line 3") != std::string::npos);
  CHECK(message("oracle = sphere\ncells = 10:5\n").find("spec line 2") != std::string::npos);
  CHECK(message("oracle = sphere\nnorm\n").find("spec line 2") != std::string::npos);
  CHECK(message("oracle = sphere\nseed = x\n").find("spec line 2") != std::string::npos);
  CHECK_FALSE(message("oracle = sphere\ncells = 10:5:1\n").empty());  // custom needs epsilon
}

TEST_CASE("budget/baseline/p lists expand to their product") {
  const ExperimentSpec s = parse(
      "oracle = sphere\nbudget = 100, 200\nbaseline = 50\np = 1, 2\nepsilon = 1\noutput = x\n");
  CHECK(s.cells.size() == 4);
  CHECK(s.cells[0].id() == "Q100_N50_p1");
}

TEST_CASE("a three-cell sweep writes one line per attack and one row per cell") {
  const fs::path dir = scratch("sweep");
  const ExperimentSpec spec = parse(hyperplane_spec(dir / "run"));
  const ExperimentResult res = run_experiment(spec);
  const auto records = read_jsonl(res.jsonl_path);
  CHECK(records.size() == 30);
  for (const auto& r : records) CHECK_NOTHROW(validate_record(r));
  const auto rows = read_summary_csv(res.csv_path);
  REQUIRE(rows.size() == 3);
  CHECK(read_all(res.csv_path).rfind(kSummaryHeader, 0) == 0);

  // The CSV matches a summary recomputed from the JSONL.
  const auto again = summarize_jsonl(res.jsonl_path, spec);
  REQUIRE(again.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rows[i].cell_id == again[i].cell_id);
    CHECK(rows[i].n == again[i].n);
    CHECK(rows[i].sr.value_or(-1) == doctest::Approx(again[i].sr.value_or(-1)).epsilon(1e-9));
    CHECK(rows[i].median_l2.value_or(-1) ==
          doctest::Approx(again[i].median_l2.value_or(-1)).epsilon(1e-9));
    CHECK(rows[i].mean_pp.value_or(-1) ==
          doctest::Approx(again[i].mean_pp.value_or(-1)).epsilon(1e-9));
  }
  CHECK(fs::exists(res.summary_json_path));
}

TEST_CASE("reruns are identical apart from wall time, at any job count") {
  const fs::path dir = scratch("rerun");
  ExperimentSpec a = parse(hyperplane_spec(dir / "a"));
  ExperimentSpec b = parse(hyperplane_spec(dir / "b"));
  b.jobs = 3;
  const std::regex wall("\"wall_time_ms\":[^,}]*");
  const auto strip = [&](const fs::path& p) { return std::regex_replace(read_all(p), wall, ""); };
  const auto ra = run_experiment(a);
  const auto rb = run_experiment(b);
  CHECK(strip(ra.jsonl_path) == strip(rb.jsonl_path));
  CHECK(read_all(ra.csv_path) == read_all(rb.csv_path));
}

TEST_CASE("charts depend only on the rows") {
  const fs::path dir = scratch("charts");
  const auto res = run_experiment(parse(hyperplane_spec(dir / "run")));
  const auto rows = read_summary_csv(res.csv_path);
  const auto first = render_charts(rows);
  const auto second = render_charts(rows);
  REQUIRE(first.size() == 3);
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].name == second[i].name);
    CHECK(first[i].svg == second[i].svg);
    CHECK(first[i].svg.rfind("<svg", 0) == 0);
  }
}
