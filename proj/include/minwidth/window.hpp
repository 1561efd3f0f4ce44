#pragma once

#include <optional>

#include "minwidth/net.hpp"

namespace minwidth {

// Interval [a, b] on which a width-1 net is strictly increasing and crosses
// the chord through (a, rho(a)), (b, rho(b)) exactly once, from below to
// above, at c.
struct SigmoidalWindow {
  double a = 0.0;
  double b = 1.0;
  double c = 0.5;
  double rho_a = 0.0;
  double rho_b = 1.0;

  double chord_slope() const { return (rho_b - rho_a) / (b - a); }
  double chord(double x) const { return rho_a + chord_slope() * (x - a); }
};

struct SigmoidalBase {
  NarrowNet rho;
  SigmoidalWindow window;
};

// Validates a fixed anchor pair: strict increase plus the single
// below-then-above crossing pattern on a jittered grid; locates c by
// bisection on rho(x) - chord(x).
std::optional<SigmoidalWindow> validate_window(const NarrowNet& rho, double a, double b,
                                               int grid_n, std::uint64_t seed = 2024);

std::optional<SigmoidalWindow> find_sigmoidal_window(const NarrowNet& rho, Interval search,
                                                     int grid_n, std::uint64_t seed = 2024);

// Certificate-specific construction of a width-1 sigmoidal-shape net. The
// MonotoneLimit kind never reaches this (it has a closed-form step recipe).
SigmoidalBase build_sigmoidal_base(const ActPtr& act);

}  // namespace minwidth
