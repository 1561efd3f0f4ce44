#pragma once

#include <map>
#include <string>
#include <vector>

#include "minwidth/decoder.hpp"
#include "minwidth/step.hpp"

namespace minwidth {

// Cartesian family of per-axis disjoint compact intervals.
struct GridSpec {
  std::vector<std::vector<Interval>> axes;

  int dim() const { return static_cast<int>(axes.size()); }
  void check() const;
};

// Shrunken uniform partition of [0,1]^dx: cell nu spans
// [(nu_i-1+gamma)/N, (nu_i-gamma)/N] per coordinate.
struct CellPartition {
  int dx = 1;
  int N = 1;
  double gamma = 0.1;

  Interval axis_cell(int nu_i) const {
    return {(nu_i - 1 + gamma) / N, (nu_i - gamma) / N};
  }
  std::vector<CellIndex> all_cells() const;
  BoxDomain cell_box(const CellIndex& nu) const;
  Eigen::VectorXd cell_center(const CellIndex& nu) const;
  bool cell_contains(const CellIndex& nu, const Eigen::VectorXd& x) const;
};

// Constants derived during a build, for reproducibility audits.
using BuildLog = std::map<std::string, std::vector<double>>;

// Lemma-style separator: f(x)_1 = rho(x_1 - b), f(x)_2 = x_2 + r (rho(x_1-b) - x_1),
// realized exactly as the shear conjugation of a lifted step net. `eta` is the
// first-coordinate clearance of the sets being separated (the step deadzone),
// `xi` the step error.
NarrowNet build_separator(double b, double r, double xi, double eta, const StepFactory& steps,
                          const BoxDomain& k);

struct FlattenResult {
  NarrowNet net;
  // Cell index (per-axis, 1-based) -> image interval, padded to contain the
  // true image; sorted output order equals the flattened 1-grid order.
  std::vector<std::pair<CellIndex, Interval>> cells;
  // Analytic bound on the image of the whole input box, not just the cells.
  Interval out_range;
  BuildLog log;
};

// in2: range the second input coordinate can take beyond the axis intervals
// (defaults to the axis hull). Needed to bound the image of off-cell inputs.
FlattenResult flatten_2grid(const GridSpec& grid, const StepFactory& steps,
                            Interval in2 = {0.0, 0.0});
FlattenResult flatten_dgrid(const GridSpec& grid, const StepFactory& steps,
                            BoxDomain input_hull = {});

struct PiecewiseResult {
  NarrowNet net;
  BuildLog log;
};

// Width-2 net within eps of values[k] on intervals[k] and into [0,1] on all
// of K.
PiecewiseResult build_piecewise_constant(Interval k, std::vector<Interval> intervals,
                                         std::vector<double> values, double eps,
                                         const StepFactory& steps);

struct EncoderResult {
  NarrowNet net;
  BuildLog log;
};

// ball_radius: accuracy of the code-point balls; defaults to the partition's
// gamma when not given.
EncoderResult build_encoder(const CellPartition& partition,
                            const std::vector<std::pair<CellIndex, double>>& codes,
                            const StepFactory& steps, double ball_radius = 0.0);

}  // namespace minwidth
