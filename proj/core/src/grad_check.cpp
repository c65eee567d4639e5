#include "medsum/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "medsum/rng.hpp"

namespace medsum {

GradCheckReport grad_check(const LossBuilder& f,
                           const std::vector<TensorRef>& params, real eps,
                           std::uint64_t seed, int coords_per_tensor) {
  for (const auto& p : params) p->zero_grad();
  std::vector<std::vector<real>> analytic;
  {
    Tape tape;
    TensorRef loss = f(tape);
    tape.backward(loss);
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p->grad);
  }

  auto eval = [&f]() {
    Tape tape;
    return f(tape)->values[0];
  };

  Lcg64 rng(seed);
  GradCheckReport report;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& p = *params[t];
    std::vector<int> coords(static_cast<std::size_t>(p.size()));
    std::iota(coords.begin(), coords.end(), 0);
    if (p.size() > coords_per_tensor) {
      rng.shuffle(coords);
      coords.resize(static_cast<std::size_t>(coords_per_tensor));
    }
    for (int c : coords) {
      const real saved = p.at(c);
      p.at(c) = saved + eps;
      const real f_plus = eval();
      p.at(c) = saved - eps;
      const real f_minus = eval();
      p.at(c) = saved;
      const real numeric = (f_plus - f_minus) / (2.0 * eps);
      const real a = analytic[t][static_cast<std::size_t>(c)];
      const real denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      report.max_rel_error = std::max(report.max_rel_error, std::fabs(a - numeric) / denom);
      ++report.coords_checked;
    }
  }
  for (const auto& p : params) p->zero_grad();
  return report;
}

}  // namespace medsum
