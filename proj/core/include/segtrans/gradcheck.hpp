#pragma once

#include <functional>
#include <string>
#include <vector>

#include "segtrans/graph.hpp"

namespace segtrans {

// Builds the loss graph over the current parameter values and returns the
// scalar loss node. Must be deterministic given the Graph's rng seed.
using LossBuilder = std::function<NodeId(Graph&)>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  std::vector<std::pair<std::string, double>> per_param;  // (name, max rel err)
};

// Central finite differences (f(x+h) - f(x-h)) / 2h against the tape's
// analytic gradients. At most coords_per_tensor coordinates are probed per
// tensor (all of them when the tensor is small); coordinate sampling and the
// graph's dropout draws are seeded so every evaluation sees the same
// function. Relative error uses max(|analytic|, |numeric|, 1) as scale.
GradCheckReport gradient_check(const LossBuilder& build_loss, std::vector<Parameter*> params,
                               double h = 1e-5, int coords_per_tensor = 100,
                               uint64_t seed = 0x5eed);

}  // namespace segtrans
