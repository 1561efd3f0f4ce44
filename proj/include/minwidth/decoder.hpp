#pragma once

#include <map>
#include <vector>

#include "minwidth/modulus.hpp"
#include "minwidth/step.hpp"

namespace minwidth {

using CellIndex = std::vector<int>;  // 1-based per-coordinate cube index

// One tracked interval: f(iv) lies inside cube nu. The anchor is the
// flattest sampled point of iv; code points prefer flat, long intervals so
// the decoder's local modulus stays tame.
struct TrackedInterval {
  CellIndex nu;
  Interval iv;
  double anchor = 0.0;
  double slope = 0.0;       // local slope estimate at the anchor
  bool selectable = true;   // in the flat subset used for code points
};

// Curve [0,1] -> [0,1]^dim of width dim whose tracked intervals land inside
// the corresponding 1/N grid cubes.
struct FillingCurve {
  NarrowNet net;
  int N = 1;
  int dim = 1;
  std::vector<TrackedInterval> tracked;  // sorted by interval position

  const TrackedInterval* find_tracked(const CellIndex& nu) const;
};

struct CodePoint {
  CellIndex nu;  // cube of the curve the code lands in
  double c = 0.0;
  Eigen::VectorXd target;
  double dist = 0.0;         // |f(c) - target| in the sup norm
  double local_slope = 0.0;  // curve steepness at c
};

struct IndicatorOptions {
  double eps_override = 0.0;   // 0: default 1/(4N)
  double zeta_override = 0.0;  // 0: default gamma/2
};

// Width-2 net f with f(x)_1 = x whose second output sweeps
// [1/(2N), 1-1/(2N)] inside every gamma-ball around the z points.
NarrowNet build_indicator(const StepFactory& steps, std::vector<double> z, double gamma, int N,
                          const IndicatorOptions& opts = {});

FillingCurve extend_filling_curve(const FillingCurve& curve, const StepFactory& steps);
FillingCurve build_filling_curve(int N, int d, const StepFactory& steps);

// ball_radius > 0 trades distance against local steepness: an encoder ball
// of that radius slides the decoder output by slope * radius, so picks
// minimize dist + slope * ball_radius.
std::vector<CodePoint> pick_code_points(const FillingCurve& curve,
                                        const std::vector<Eigen::VectorXd>& targets,
                                        double delta, double ball_radius = 0.0);

struct CoverageReport {
  bool pass = false;
  int targets = 0;
  int covered = 0;
  double worst_uncovered = 0.0;  // best distance found for the worst target
};

// Definition check: every point of a uniform grid of [0,1]^dim lies within
// `radius` (sup norm) of some sampled curve point.
CoverageReport verify_coverage(const FillingCurve& curve, double radius,
                               int grid_per_axis = 20, int curve_samples = 100000,
                               std::uint64_t seed = 5);

struct ContainmentReport {
  bool pass = false;
  bool disjoint = false;
  bool cubes_ok = false;
  bool range_ok = false;
  double worst_cube_violation = 0.0;
  double worst_range_violation = 0.0;
};

ContainmentReport verify_containment(const FillingCurve& curve, int samples_per_interval = 100,
                                     std::uint64_t seed = 6);

// Modulus of the decoder as used: perturbations around tracked-interval
// midpoints, where code points live. Output distances in the p norm.
ModulusTable code_modulus_table(const FillingCurve& curve, double p, int pairs_per_radius = 32,
                                std::uint64_t seed = 8);

void save_tracked_csv(const FillingCurve& curve, const std::string& path);

}  // namespace minwidth
