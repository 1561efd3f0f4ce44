#pragma once

#include "minwidth/net.hpp"
#include "minwidth/window.hpp"

namespace minwidth {

// Width-1 net witnessing the step condition on `domain`: range in [0,1],
// strictly increasing, within eps of the unit step outside (-zeta, zeta).
struct StepApproximator {
  NarrowNet net;
  Interval domain;
  double eps = 0.0;
  double zeta = 0.0;
  int iterations = 0;      // fixed-point iterations (0 for closed forms)
  double scale_m = 0.0;    // closed-form input scale, when used
  SigmoidalWindow window;  // window used, when iterated
  bool used_window = false;
};

struct IdentityApproximator {
  NarrowNet net;
  Interval domain;
  double eps = 0.0;
  double z = 0.0;
  double lambda = 0.0;
  double sigma_z = 0.0;
  double dsigma_z = 0.0;
};

struct StepVerifyReport {
  bool pass = false;
  bool range_ok = false;
  bool monotone_ok = false;
  bool error_ok = false;
  double max_err_off_deadzone = 0.0;
  double min_gap = 0.0;      // minimum successive difference on the grid
  double range_lo = 0.0;
  double range_hi = 0.0;
  int interior_ties = 0;     // ties away from the saturated plateaus
  int inversions = 0;
  int grid_n = 0;
};

struct StepOptions {
  int max_iterations = 10000;
  // Ties between successive grid values are tolerated only where the value
  // sits within this distance of 0 or 1 (saturated plateaus round flat in
  // doubles long before the map stops being strictly increasing).
  double tie_value_tol = 1e-8;
  int verify_grid = 10000;
  std::uint64_t seed = 17;
  // Keep distinct inputs numerically distinct across the whole domain by
  // capping every sigma argument and composing layers instead of using one
  // steep scale. Needed when the step output feeds further comparisons
  // (grid-flattening separators); saturation to exact 0/1 is fine elsewhere.
  bool preserve_resolution = false;
};

IdentityApproximator build_identity_approx(const ActPtr& act, DiffPoint dp, Interval k,
                                           double eps);

StepApproximator build_step_approx(const ActPtr& act, Interval k, double eps, double zeta,
                                   const StepOptions& opts = {});

StepVerifyReport verify_step_approx(const StepApproximator& sa, int grid_n,
                                    double tie_value_tol = 1e-8, std::uint64_t seed = 99);

// Bound builder used by the decoder/encoder constructions.
struct StepFactory {
  ActPtr act;
  StepOptions opts;

  StepApproximator operator()(Interval k, double eps, double zeta) const {
    return build_step_approx(act, k, eps, zeta, opts);
  }
};

}  // namespace minwidth
