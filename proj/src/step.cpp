#include "minwidth/step.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <vector>

namespace minwidth {

namespace {

constexpr double kLimitProbe = 1e6;
constexpr double kLimitTol = 1e-9;

struct LimitInfo {
  bool left_finite = false;
  bool right_finite = false;
  double left = 0.0;
  double right = 0.0;
};

LimitInfo detect_limits(const ActivationSpec& act) {
  LimitInfo info;
  const double l1 = act.eval(-kLimitProbe);
  const double l2 = act.eval(-2.0 * kLimitProbe);
  if (std::isfinite(l1) && std::isfinite(l2) && std::abs(l1 - l2) <= kLimitTol) {
    info.left_finite = true;
    info.left = l2;
  }
  const double r1 = act.eval(kLimitProbe);
  const double r2 = act.eval(2.0 * kLimitProbe);
  if (std::isfinite(r1) && std::isfinite(r2) && std::abs(r1 - r2) <= kLimitTol) {
    info.right_finite = true;
    info.right = r2;
  }
  return info;
}

bool sampled_nondecreasing(const ActivationSpec& act, Interval k, int n = 512) {
  double prev = act.eval(k.lo);
  for (int i = 1; i < n; ++i) {
    const double x = k.lo + k.length() * i / (n - 1);
    const double v = act.eval(x);
    if (v < prev) return false;
    prev = v;
  }
  return true;
}

// Smallest M (then nudged up) with f(M*zeta) >= 1-eps and f(-M*zeta) <= eps,
// where f is an increasing map with range in [0,1].
double solve_input_scale(const std::function<double(double)>& f, double zeta, double eps,
                         const char* stage) {
  auto ok = [&](double m) { return f(m * zeta) >= 1.0 - eps && f(-m * zeta) <= eps; };
  double hi = 1.0;
  while (!ok(hi)) {
    hi *= 2.0;
    if (hi > 1e290) fail(ErrorKind::StepBuildFailed, stage, "input scale exceeded 1e290");
  }
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (ok(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  double m = hi * (1.0 + 1e-12);
  if (!ok(m)) m = hi * (1.0 + 1e-9);
  if (!ok(m)) fail(ErrorKind::StepBuildFailed, stage, "scale refinement lost feasibility");
  return m;
}

NarrowNet sigma_hat_net(const ActPtr& act, const LimitInfo& lim) {
  // Normalizes a monotone one-sided-limit activation to "increasing, 0 at
  // -inf, unbounded at +inf".
  NarrowNet n;
  n.activation = act;
  if (lim.left_finite) {
    n.affines.push_back(affine_scalar(1.0, 0.0));
    n.tags.push_back({Tag::Sigma});
    n.affines.push_back(affine_scalar(1.0, -lim.left));
  } else {
    n.affines.push_back(affine_scalar(-1.0, 0.0));
    n.tags.push_back({Tag::Sigma});
    n.affines.push_back(affine_scalar(-1.0, lim.right));
  }
  return n;
}

StepApproximator build_monotone_limit(const ActPtr& act, const LimitInfo& lim, Interval k,
                                      double eps, double zeta) {
  StepApproximator sa;
  sa.domain = k;
  sa.eps = eps;
  sa.zeta = zeta;
  if (lim.left_finite && lim.right_finite) {
    const double span = lim.right - lim.left;
    if (!(span > 0.0)) {
      fail(ErrorKind::StepBuildFailed, "build_step_approx", "degenerate limits");
    }
    auto val = [&](double x) { return (act->eval(x) - lim.left) / span; };
    const double m = solve_input_scale(val, zeta, eps, "build_step_approx");
    NarrowNet net;
    net.activation = act;
    net.affines.push_back(affine_scalar(m, 0.0));
    net.tags.push_back({Tag::Sigma});
    net.affines.push_back(affine_scalar(1.0 / span, -lim.left / span));
    sa.net = std::move(net);
    sa.scale_m = m;
    return sa;
  }
  // One finite limit: squash the unbounded side first, then scale.
  NarrowNet hat = sigma_hat_net(act, lim);
  const double hat1 = forward_scalar(hat, 1.0);
  if (!(hat1 > 0.0)) {
    fail(ErrorKind::StepBuildFailed, "build_step_approx", "normalized value at 1 not positive");
  }
  // psi(x) = (hat(1) - hat(1 - hat(x))) / hat(1), increasing with limits 0 and 1.
  NarrowNet psi = compose(compose(hat, affine_net(affine_scalar(-1.0, 1.0))),
                          compose(hat, affine_net(affine_scalar(-1.0 / hat1, 1.0))));
  auto val = [&](double x) { return forward_scalar(psi, x); };
  const double m = solve_input_scale(val, zeta, eps, "build_step_approx");
  sa.net = compose(affine_net(affine_scalar(m, 0.0)), psi);
  sa.scale_m = m;
  return sa;
}

// Probes whether values outside [a, b] are pulled monotonically toward the
// window, so a translation-only pre-map is sound on a huge domain.
bool globally_attracting(const NarrowNet& rho_hat, const SigmoidalWindow& w, Interval mapped) {
  const double span = w.b - w.a;
  for (double g = 0.5; ; g *= 4.0) {
    const double below = w.a - g * span;
    if (below >= mapped.lo) {
      const double v = forward_scalar(rho_hat, below);
      if (!(v > below && v <= w.a + 1e-9 * span)) return false;
    }
    const double above = w.b + g * span;
    if (above <= mapped.hi) {
      const double v = forward_scalar(rho_hat, above);
      if (!(v < above && v >= w.b - 1e-9 * span)) return false;
    }
    if (below < mapped.lo && above > mapped.hi) break;
  }
  return true;
}

StepApproximator build_iterated(const ActPtr& act, Interval k, double eps, double zeta,
                                const StepOptions& opts) {
  SigmoidalBase base = build_sigmoidal_base(act);
  const SigmoidalWindow& w = base.window;
  const double span = w.b - w.a;
  const double slope = w.chord_slope();
  if (!(slope > 0.0)) {
    fail(ErrorKind::StepBuildFailed, "build_step_approx", "chord slope not positive");
  }

  // rho_hat = chord_inverse o rho keeps a, b, c fixed.
  NarrowNet rho_hat =
      compose(base.rho, affine_net(affine_scalar(1.0 / slope, w.a - w.rho_a / slope)));

  double s = std::min((w.b - w.c) / k.hi, (w.a - w.c) / k.lo);
  bool translated = false;
  if (!(w.c + s * zeta > w.c && w.c - s * zeta < w.c)) {
    // The squeeze underflows; fall back to translation when the combinator is
    // globally attracting outside its window.
    const Interval mapped{k.lo + w.c, k.hi + w.c};
    if (!globally_attracting(rho_hat, w, mapped)) {
      fail(ErrorKind::BudgetInfeasible, "build_step_approx",
           "deadzone below double resolution for this window and domain");
    }
    s = 1.0;
    translated = true;
  }

  // Resolution-preserving nets rescale with a zero bottom inset: the pending
  // values near the lower fixed point keep pure multiplicative structure, so
  // relative gaps survive all the way into denormals. Elsewhere a small
  // symmetric inset absorbs convergence residue of out-of-window points.
  const double inset = opts.preserve_resolution ? 0.0 : 1e-9 * span;
  const double edge_slack = 1e-9 * span;
  const double hi_target = w.b - span * eps * 0.9;
  const double lo_target = w.a + span * eps * 0.9;

  double up = w.c + s * zeta;
  double un = w.c - s * zeta;
  double ep = w.c + s * k.hi;
  double en = w.c + s * k.lo;
  int n = 0;
  int stalled = 0;
  while (!(up >= hi_target && un <= lo_target && ep <= w.b + edge_slack &&
           en >= w.a - edge_slack)) {
    if (n >= opts.max_iterations) {
      fail(ErrorKind::IterationCap, "build_step_approx",
           "fixed-point iteration cap " + std::to_string(opts.max_iterations) + " reached");
    }
    const double up2 = forward_scalar(rho_hat, up);
    const double un2 = forward_scalar(rho_hat, un);
    const double ep2 = forward_scalar(rho_hat, ep);
    const double en2 = forward_scalar(rho_hat, en);
    if (up2 < up || un2 > un) {
      fail(ErrorKind::MonotonicityLoss, "build_step_approx",
           "iterates moved against the fixed-point direction at n=" + std::to_string(n));
    }
    if (up2 == up && un2 == un && ep2 == ep && en2 == en) {
      if (++stalled >= 3) {
        fail(ErrorKind::IterationCap, "build_step_approx", "iteration stalled short of target");
      }
    } else {
      stalled = 0;
    }
    up = up2;
    un = un2;
    ep = ep2;
    en = en2;
    ++n;
  }

  NarrowNet net = affine_net(affine_scalar(s, w.c));
  for (int i = 0; i < n; ++i) append(net, rho_hat);
  // Bottom inset covers any residue below a; the top side keeps a guard so
  // one-ulp overshoots of b still land inside [0, 1].
  const double bottom = std::max(inset, 2.0 * std::max(0.0, w.a - en));
  const double top = std::max({inset, 1e-12 * span, 2.0 * std::max(0.0, ep - w.b)});
  const double denom = span + bottom + top;
  net = compose(net, affine_net(affine_scalar(1.0 / denom, -(w.a - bottom) / denom)));

  StepApproximator sa;
  sa.net = std::move(net);
  sa.domain = k;
  sa.eps = eps;
  sa.zeta = zeta;
  sa.iterations = n;
  sa.window = w;
  sa.used_window = true;
  sa.scale_m = translated ? 1.0 : s;
  return sa;
}

}  // namespace

IdentityApproximator build_identity_approx(const ActPtr& act, DiffPoint dp, Interval k,
                                           double eps) {
  if (!(eps > 0.0)) fail(ErrorKind::InvalidArgument, "build_identity_approx", "eps <= 0");
  if (!(dp.derivative != 0.0)) {
    fail(ErrorKind::InvalidArgument, "build_identity_approx", "zero derivative point");
  }
  const double sz = act->eval(dp.z);
  const int n = 2048;
  std::vector<double> xs;
  xs.reserve(n);
  if (k.length() == 0.0) {
    xs.push_back(k.lo);
  } else {
    xs = jittered_grid(k, n, 4242);
  }
  for (double lambda = 1e-2; lambda >= 1e-12; lambda *= 0.5) {
    double err = 0.0;
    for (double x : xs) {
      const double v = (act->eval(dp.z + lambda * x) - sz) / (lambda * dp.derivative);
      err = std::max(err, std::abs(v - x));
      if (err > eps) break;
    }
    if (err <= eps) {
      IdentityApproximator ia;
      ia.domain = k;
      ia.eps = eps;
      ia.z = dp.z;
      ia.lambda = lambda;
      ia.sigma_z = sz;
      ia.dsigma_z = dp.derivative;
      NarrowNet net;
      net.activation = act;
      net.affines.push_back(affine_scalar(lambda, dp.z));
      net.tags.push_back({Tag::Sigma});
      const double d = lambda * dp.derivative;
      net.affines.push_back(affine_scalar(1.0 / d, -sz / d));
      ia.net = std::move(net);
      return ia;
    }
  }
  {
    char buf[160];
    snprintf(buf, sizeof buf, "lambda reached 1e-12 before meeting eps=%.17g on [%.17g, %.17g] z=%.17g", eps, k.lo, k.hi, dp.z);
    fail(ErrorKind::LambdaUnderflow, "build_identity_approx", buf);
  }
}

StepApproximator build_step_approx(const ActPtr& act, Interval k, double eps, double zeta,
                                   const StepOptions& opts) {
  if (!act) fail(ErrorKind::InvalidArgument, "build_step_approx", "null activation");
  if (!(eps > 0.0 && eps < 0.5)) {
    fail(ErrorKind::InvalidArgument, "build_step_approx", "need 0 < eps < 0.5");
  }
  if (!(zeta > 0.0 && zeta < k.length() / 2.0)) {
    fail(ErrorKind::InvalidArgument, "build_step_approx", "need 0 < zeta < |K|/2");
  }
  if (!(k.lo < 0.0 && k.hi > 0.0)) {
    fail(ErrorKind::InvalidArgument, "build_step_approx", "0 must be interior to K");
  }
  if (const auto* kink = std::get_if<KinkCert>(&act->certificate)) {
    if (!(kink->v_minus != kink->v_plus && kink->v_minus * kink->v_plus > 0.0)) {
      fail(ErrorKind::CertificateInvalid, "build_step_approx",
           "kink slopes must differ and share a sign (v_minus=" +
               std::to_string(kink->v_minus) + ", v_plus=" + std::to_string(kink->v_plus) +
               ")");
    }
  }
  // Monotone activations with a detected finite limit get the shallow closed
  // form. Saturating closed forms collapse far-apart inputs to equal doubles,
  // so resolution-preserving callers take the fixed-point route instead: its
  // geometric contraction keeps distinct inputs distinct.
  if (!opts.preserve_resolution && act->monotone && sampled_nondecreasing(*act, k)) {
    const LimitInfo lim = detect_limits(*act);
    if (lim.left_finite || lim.right_finite) {
      return build_monotone_limit(act, lim, k, eps, zeta);
    }
  }
  return build_iterated(act, k, eps, zeta, opts);
}

StepVerifyReport verify_step_approx(const StepApproximator& sa, int grid_n,
                                    double tie_value_tol, std::uint64_t seed) {
  if (grid_n < 1000) {
    fail(ErrorKind::InvalidArgument, "verify_step_approx", "grid_n must be >= 1000");
  }
  StepVerifyReport rep;
  rep.grid_n = grid_n;
  const auto xs = jittered_grid(sa.domain, grid_n, seed);
  std::vector<double> vs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) vs[i] = forward_scalar(sa.net, xs[i]);

  rep.range_lo = *std::min_element(vs.begin(), vs.end());
  rep.range_hi = *std::max_element(vs.begin(), vs.end());
  rep.range_ok = rep.range_lo >= 0.0 && rep.range_hi <= 1.0;

  rep.max_err_off_deadzone = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] > -sa.zeta && xs[i] < sa.zeta) continue;
    const double step = xs[i] >= 0.0 ? 1.0 : 0.0;
    rep.max_err_off_deadzone = std::max(rep.max_err_off_deadzone, std::abs(vs[i] - step));
  }
  rep.error_ok = rep.max_err_off_deadzone <= sa.eps;

  rep.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < vs.size(); ++i) {
    const double gap = vs[i] - vs[i - 1];
    rep.min_gap = std::min(rep.min_gap, gap);
    if (gap < 0.0) {
      ++rep.inversions;
    } else if (gap == 0.0) {
      const double v = vs[i];
      const bool saturated = std::min(v, 1.0 - v) <= tie_value_tol;
      if (!saturated) ++rep.interior_ties;
    }
  }
  rep.monotone_ok = rep.inversions == 0 && rep.interior_ties == 0;
  rep.pass = rep.range_ok && rep.error_ok && rep.monotone_ok;
  return rep;
}

}  // namespace minwidth
