#ifndef HLSA_SCENARIO_HPP
#define HLSA_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hlsa/oracle.hpp"
#include "hlsa/tensor.hpp"

namespace hlsa {

enum class SyntheticKind { kSphere, kHyperplane };

SyntheticKind parse_synthetic_kind(const std::string& text);
std::string to_string(SyntheticKind kind);

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kSphere;
  std::size_t dim = 2;
  double radius = 1.0;        // sphere
  std::size_t support = 5;    // hyperplane: nonzero weights
  std::size_t samples = 1;
  std::uint64_t seed = 0;
};

// An oracle plus the clean inputs to attack.
struct Scenario {
  std::shared_ptr<const Oracle> oracle;
  std::vector<Tensor> images;
  std::vector<Label> labels;
  bool image_domain = false;  // inputs live in [0,1] and should be clipped
};

// sphere: centered at the origin; sample 0 is the center, later samples
// sit at a random offset of up to half the radius. Labels are 1 (inside).
// hyperplane: unit normal on `support` random dimensions, bias -1; samples
// are N(0, 0.3²) points labeled by the oracle itself.
Scenario make_synthetic(const SyntheticSpec& spec);

// SAWT model + dataset (IDX directory or raw tensor file).
Scenario load_model_scenario(const std::filesystem::path& model,
                             const std::filesystem::path& dataset);

}  // namespace hlsa

#endif  // HLSA_SCENARIO_HPP
