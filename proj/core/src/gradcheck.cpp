#include "segtrans/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace segtrans {

GradCheckReport gradient_check(const LossBuilder& build_loss, std::vector<Parameter*> params,
                               double h, int coords_per_tensor, uint64_t seed) {
  auto eval_loss = [&]() {
    Rng rng(derive_seed(seed, "gradcheck-dropout"));
    Graph g(Graph::Mode::train, &rng);
    return g.value(build_loss(g)).data[0];
  };

  // Analytic gradients.
  for (Parameter* p : params) p->zero_grad();
  {
    Rng rng(derive_seed(seed, "gradcheck-dropout"));
    Graph g(Graph::Mode::train, &rng);
    g.backward(build_loss(g));
  }

  GradCheckReport report;
  Rng coord_rng(derive_seed(seed, "gradcheck-coords"));
  for (Parameter* p : params) {
    const size_t n = p->value.numel();
    std::vector<size_t> coords;
    if (n <= static_cast<size_t>(coords_per_tensor)) {
      coords.resize(n);
      for (size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      coords.reserve(static_cast<size_t>(coords_per_tensor));
      for (int i = 0; i < coords_per_tensor; ++i) coords.push_back(coord_rng.next_below(n));
    }
    double param_max = 0.0;
    for (size_t idx : coords) {
      const double saved = p->value.data[idx];
      p->value.data[idx] = saved + h;
      const double f_plus = eval_loss();
      p->value.data[idx] = saved - h;
      const double f_minus = eval_loss();
      p->value.data[idx] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double analytic = p->grad.data[idx];
      const double scale = std::max({std::abs(analytic), std::abs(numeric), 1.0});
      const double rel = std::abs(analytic - numeric) / scale;
      param_max = std::max(param_max, rel);
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = p->name;
        report.worst_index = idx;
      }
    }
    report.per_param.emplace_back(p->name, param_max);
  }
  return report;
}

}  // namespace segtrans
