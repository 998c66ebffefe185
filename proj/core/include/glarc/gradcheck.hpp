#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "glarc/params.hpp"

namespace glarc {

// Loss under test. Called with grads == nullptr for plain evaluations
// (finite differences) and with a zeroed GradStore to collect the analytic
// gradient. Must be deterministic in the parameters.
using LossFn = std::function<double(const ParamStore&, GradStore*)>;

struct GradCheckOptions {
  double h = 1e-5;    // central-difference step, expected in [1e-7, 1e-3]
  double tol = 1e-4;  // max relative error allowed
  // Coordinates checked per tensor: all of them when numel <= exhaustive_limit,
  // otherwise sample_coords seeded draws plus the same count of coordinates
  // with the largest analytic magnitude.
  int exhaustive_limit = 512;
  int sample_coords = 64;
  std::uint64_t seed = 0;
};

struct GradReport {
  struct PerParam {
    std::string name;
    double max_rel_err = 0.0;
    int coords_checked = 0;
  };
  std::vector<PerParam> params;
  double max_rel_err = 0.0;
  double tol = 0.0;
  bool pass = false;  // pass <=> max_rel_err <= tol

  const PerParam& worst() const;
};

// Central-difference check of the analytic gradient, per coordinate:
//   numeric = (f(p + h e_i) - f(p - h e_i)) / (2h)
//   rel err = |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
// Throws NumericError if two evaluations of the loss at the same point
// disagree (non-deterministic loss), UsageError on h outside [1e-7, 1e-3].
GradReport grad_check(const LossFn& loss, ParamStore params,
                      const GradCheckOptions& opts = {});

}  // namespace glarc
