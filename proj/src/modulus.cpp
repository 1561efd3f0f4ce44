#include "minwidth/modulus.hpp"

#include <algorithm>
#include <cmath>

namespace minwidth {

namespace {
constexpr double kSafety = 1.5;
}

double norm_p(const Eigen::VectorXd& v, double p) {
  if (p <= 0.0) return v.lpNorm<Eigen::Infinity>();
  if (p == 1.0) return v.lpNorm<1>();
  if (p == 2.0) return v.norm();
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]), p);
  return std::pow(acc, 1.0 / p);
}

double ModulusTable::eval(double r) const {
  if (radii.empty()) fail(ErrorKind::InvalidArgument, "ModulusTable", "empty table");
  auto it = std::lower_bound(radii.begin(), radii.end(), r);
  if (it == radii.end()) return omega.back();
  return omega[static_cast<std::size_t>(it - radii.begin())];
}

double ModulusTable::largest_radius_within(double bound) const {
  double best = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (omega[i] <= bound) best = std::max(best, radii[i]);
  }
  return best;
}

ModulusTable estimate_modulus_fn(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                 const BoxDomain& box, int n_pairs, double p,
                                 std::uint64_t seed, std::vector<double> ladder) {
  if (n_pairs < 1000) fail(ErrorKind::InvalidArgument, "estimate_modulus", "n_pairs < 1000");
  const int d = box.dim();
  double max_side = 0.0;
  for (const auto& iv : box.dims) max_side = std::max(max_side, iv.length());
  // Dense enough that the conservative ceil-lookup inflates by < 1.2x.
  if (ladder.empty()) ladder = log_ladder(1e-4 * max_side, 1.01 * max_side, 60);

  Rng rng(seed);
  ModulusTable table;
  table.radii = ladder;
  table.omega.assign(ladder.size(), 0.0);
  Eigen::VectorXd x(d), y(d);
  for (std::size_t li = 0; li < ladder.size(); ++li) {
    const double r = ladder[li];
    double worst = 0.0;
    for (int k = 0; k < n_pairs; ++k) {
      for (int i = 0; i < d; ++i) {
        const auto& iv = box.dims[static_cast<std::size_t>(i)];
        x[i] = uniform(rng, iv.lo, iv.hi);
        // Half the probes hit sign corners of the radius-r cube; they are the
        // extremal directions for affine pieces.
        double delta;
        if (k % 2 == 0) {
          delta = uniform(rng, 0.0, 1.0) < 0.5 ? -r : r;
        } else {
          delta = uniform(rng, -r, r);
        }
        y[i] = std::clamp(x[i] + delta, iv.lo, iv.hi);
      }
      worst = std::max(worst, norm_p(f(x) - f(y), p));
    }
    table.omega[li] = kSafety * worst;
  }
  for (std::size_t i = 1; i < table.omega.size(); ++i) {
    table.omega[i] = std::max(table.omega[i], table.omega[i - 1]);
  }
  return table;
}

ModulusTable estimate_modulus(const NarrowNet& map, const BoxDomain& box, int n_pairs, double p,
                              std::uint64_t seed, std::vector<double> ladder) {
  if (box.dim() != map.input_dim()) {
    fail(ErrorKind::DimensionMismatch, "estimate_modulus", "box dim != net input dim");
  }
  return estimate_modulus_fn([&](const Eigen::VectorXd& x) { return forward(map, x); }, box,
                             n_pairs, p, seed, std::move(ladder));
}

}  // namespace minwidth
