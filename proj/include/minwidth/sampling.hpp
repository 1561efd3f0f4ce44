#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "minwidth/errors.hpp"

namespace minwidth {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

// Uniform grid with 10% jitter on interior points; endpoints stay exact and
// ordering is preserved (jitter amplitude < half the spacing).
inline std::vector<double> jittered_grid(Interval k, int n, std::uint64_t seed) {
  if (n < 2) fail(ErrorKind::InvalidArgument, "jittered_grid", "need at least 2 points");
  std::vector<double> xs(static_cast<std::size_t>(n));
  const double h = k.length() / (n - 1);
  Rng rng(seed);
  xs.front() = k.lo;
  xs.back() = k.hi;
  for (int i = 1; i + 1 < n; ++i) {
    xs[static_cast<std::size_t>(i)] = k.lo + i * h + uniform(rng, -0.1 * h, 0.1 * h);
  }
  return xs;
}

inline std::vector<double> log_ladder(double lo, double hi, int n) {
  std::vector<double> r(static_cast<std::size_t>(n));
  const double l0 = std::log(lo), l1 = std::log(hi);
  for (int i = 0; i < n; ++i) {
    r[static_cast<std::size_t>(i)] = std::exp(l0 + (l1 - l0) * i / (n - 1));
  }
  return r;
}

}  // namespace minwidth
