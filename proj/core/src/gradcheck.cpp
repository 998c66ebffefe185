#include "glarc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>

#include "glarc/errors.hpp"
#include "glarc/rng.hpp"

namespace glarc {

const GradReport::PerParam& GradReport::worst() const {
  size_t w = 0;
  for (size_t i = 1; i < params.size(); ++i)
    if (params[i].max_rel_err > params[w].max_rel_err) w = i;
  return params[w];
}

GradReport grad_check(const LossFn& loss, ParamStore params,
                      const GradCheckOptions& opts) {
  if (!(opts.h >= 1e-7 && opts.h <= 1e-3))
    throw UsageError("grad_check step h must be in [1e-7, 1e-3]");

  const double l0 = loss(params, nullptr);
  const double l1 = loss(params, nullptr);
  if (l0 != l1)
    throw NumericError("grad_check: loss is not deterministic (" +
                       std::to_string(l0) + " vs " + std::to_string(l1) + ")");

  GradStore analytic(params);
  loss(params, &analytic);

  Rng rng(opts.seed);
  GradReport report;
  report.tol = opts.tol;

  for (int pid = 0; pid < params.size(); ++pid) {
    Tensor& t = params.tensor(pid);
    const Tensor& g = analytic.tensor(pid);
    const std::int64_t n = t.numel();

    std::set<std::int64_t> coords;
    if (n <= opts.exhaustive_limit) {
      for (std::int64_t i = 0; i < n; ++i) coords.insert(i);
    } else {
      while (static_cast<int>(coords.size()) < opts.sample_coords)
        coords.insert(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n))));
      // also the coordinates that matter most
      std::vector<std::int64_t> order(static_cast<size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
      std::partial_sort(order.begin(), order.begin() + opts.sample_coords, order.end(),
                        [&](std::int64_t a, std::int64_t b) {
                          return std::fabs(g[a]) > std::fabs(g[b]);
                        });
      for (int i = 0; i < opts.sample_coords; ++i) coords.insert(order[static_cast<size_t>(i)]);
    }

    GradReport::PerParam pp;
    pp.name = params.name(pid);
    for (std::int64_t i : coords) {
      const double saved = t[i];
      t[i] = saved + opts.h;
      const double lp = loss(params, nullptr);
      t[i] = saved - opts.h;
      const double lm = loss(params, nullptr);
      t[i] = saved;

      const double numeric = (lp - lm) / (2.0 * opts.h);
      const double rel = std::fabs(g[i] - numeric) /
                         std::max({std::fabs(g[i]), std::fabs(numeric), 1e-8});
      pp.max_rel_err = std::max(pp.max_rel_err, rel);
      ++pp.coords_checked;
    }
    report.max_rel_err = std::max(report.max_rel_err, pp.max_rel_err);
    report.params.push_back(std::move(pp));
  }

  report.pass = report.max_rel_err <= report.tol;
  return report;
}

}  // namespace glarc
