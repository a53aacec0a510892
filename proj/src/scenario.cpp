#include "hlsa/scenario.hpp"

#include <cmath>
#include <numeric>

#include "hlsa/datasets.hpp"
#include "hlsa/rng.hpp"
#include "hlsa/synthetic_oracles.hpp"
#include "hlsa/weighted_net.hpp"

namespace hlsa {

SyntheticKind parse_synthetic_kind(const std::string& text) {
  if (text == "sphere") return SyntheticKind::kSphere;
  if (text == "hyperplane") return SyntheticKind::kHyperplane;
  throw ParameterError("unknown synthetic oracle '" + text + "'");
}

std::string to_string(SyntheticKind kind) {
  return kind == SyntheticKind::kSphere ? "sphere" : "hyperplane";
}

Scenario make_synthetic(const SyntheticSpec& spec) {
  if (spec.dim == 0) throw ParameterError("synthetic dimension must be positive");
  const Shape shape{1, 1, spec.dim};
  Rng rng(spec.seed);
  Scenario out;
  if (spec.kind == SyntheticKind::kSphere) {
    auto oracle = std::make_shared<SphereOracle>(Tensor(shape), spec.radius);
    for (std::size_t i = 0; i < spec.samples; ++i) {
      Tensor x(shape);
      if (i > 0) {
        Tensor dir = normalized(sample_gaussian_direction(rng, shape), Norm::kL2);
        x = along(x, 0.5 * spec.radius * rng.uniform(), dir);
      }
      out.images.push_back(std::move(x));
      out.labels.push_back(1);
    }
    out.oracle = std::move(oracle);
  } else {
    if (spec.support < 1 || spec.support > spec.dim) {
      throw ParameterError("hyperplane support must lie in [1, dim]");
    }
    std::vector<std::size_t> order(spec.dim);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < spec.support; ++k) {
      std::swap(order[k], order[rng.uniform_index(k, spec.dim - 1)]);
    }
    Tensor w(shape);
    for (std::size_t k = 0; k < spec.support; ++k) w[order[k]] = rng.normal();
    auto oracle = std::make_shared<HyperplaneOracle>(normalized(w, Norm::kL2), -1.0);
    for (std::size_t i = 0; i < spec.samples; ++i) {
      Tensor x = sample_gaussian_direction(rng, shape);
      for (double& v : x.data()) v *= 0.3;
      out.labels.push_back(oracle->decide(x));
      out.images.push_back(std::move(x));
    }
    out.oracle = std::move(oracle);
  }
  return out;
}

Scenario load_model_scenario(const std::filesystem::path& model,
                             const std::filesystem::path& dataset) {
  LabeledImages data = load_dataset(dataset);
  if (data.images.empty()) throw std::runtime_error("dataset is empty: " + dataset.string());
  Scenario out;
  out.oracle = std::make_shared<NetOracle>(load_weighted_net(model),
                                           data.images.front().shape());
  out.images = std::move(data.images);
  out.labels = std::move(data.labels);
  out.image_domain = true;
  return out;
}

}  // namespace hlsa
