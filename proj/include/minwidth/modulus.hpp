#pragma once

#include <vector>

#include "minwidth/net.hpp"

namespace minwidth {

// Empirical modulus-of-continuity table: non-decreasing omega over a ladder
// of input radii, conservative by construction (max over samples, x1.5).
struct ModulusTable {
  std::vector<double> radii;
  std::vector<double> omega;

  // Conservative evaluation: value at the smallest tabulated radius >= r.
  double eval(double r) const;
  // Largest tabulated radius whose omega stays within `bound` (0 if none).
  double largest_radius_within(double bound) const;
  bool empty() const { return radii.empty(); }
};

// Input distances in the sup norm, output distances in the p norm
// (p = infinity when p <= 0).
ModulusTable estimate_modulus(const NarrowNet& map, const BoxDomain& box, int n_pairs,
                              double p = 0.0, std::uint64_t seed = 7,
                              std::vector<double> ladder = {});

ModulusTable estimate_modulus_fn(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                 const BoxDomain& box, int n_pairs, double p = 0.0,
                                 std::uint64_t seed = 7, std::vector<double> ladder = {});

double norm_p(const Eigen::VectorXd& v, double p);

}  // namespace minwidth
