#pragma once

#include <functional>
#include <optional>

#include "minwidth/eliminate.hpp"
#include "minwidth/encoder.hpp"

namespace minwidth {

struct TargetFunction {
  std::string name;
  int dx = 1;
  int dy = 1;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval;
  ModulusTable modulus;  // sup-norm input radii, p-norm output distances
};

// Empirical modulus for a target; call once per (target, p).
ModulusTable estimate_target_modulus(const TargetFunction& f, double p, int n_pairs = 2000,
                                     std::uint64_t seed = 11);

struct BuildParams {
  double eps = 0.0;
  double p = 2.0;
  double delta = 0.0;
  double gamma = 0.0;
  int N = 1;
};

// Largest delta, gamma and smallest N meeting the error-budget inequalities
// against the supplied modulus tables.
BuildParams select_parameters(double eps, double p, int dx, int dy,
                              const ModulusTable& omega_target,
                              const ModulusTable& omega_decoder);

struct ErrorReport {
  double lp_estimate = 0.0;
  long samples = 0;
  double ci_halfwidth = 0.0;
  double sup_on_cells = 0.0;
  double off_cell_mass = 0.0;  // fraction of samples outside every cell
};

ErrorReport measure_lp_error(const NarrowNet& net, const TargetFunction& target, double p,
                             long n, std::uint64_t seed,
                             const std::optional<CellPartition>& partition = std::nullopt);

struct ApproxOptions {
  std::uint64_t seed = 2025;
  double elimination_share = 0.1;  // fraction of eps spent on identity elimination
  StepOptions step;
};

struct ApproxBuild {
  NarrowNet net;
  BuildParams params;
  int curve_N = 1;
  CellPartition partition;
  BuildLog log;
};

// End-to-end: decoder curve, parameter selection, code points, encoder,
// composition, identity elimination. Result is pure-sigma of width
// max{dx, dy, 2}.
ApproxBuild build_approximator(const TargetFunction& target, const ActPtr& act, double eps,
                               double p, const ApproxOptions& opts = {});

}  // namespace minwidth
