#include "minwidth/window.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace minwidth {

namespace {

NarrowNet wrap_sigma(const ActPtr& act, double in_scale, double in_shift, double out_scale,
                     double out_shift) {
  NarrowNet n;
  n.activation = act;
  n.affines.push_back(affine_scalar(in_scale, in_shift));
  n.tags.push_back({Tag::Sigma});
  n.affines.push_back(affine_scalar(out_scale, out_shift));
  return n;
}

NarrowNet one_minus() {
  return affine_net(affine_scalar(-1.0, 1.0));
}

double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 160) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((flo <= 0.0) == (fm <= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Translated/reflected copy of sigma: out_sign * (sigma(x0 + in_sign*u) - sigma(x0)).
struct Normalized {
  ActPtr act;
  double x0 = 0.0;
  double y0 = 0.0;
  double in_sign = 1.0;
  double out_sign = 1.0;

  double eval(double u) const { return out_sign * (act->eval(x0 + in_sign * u) - y0); }
};

bool increasing_on(const Normalized& s, double lo, double hi, int n = 512) {
  double prev = s.eval(lo);
  for (int i = 1; i < n; ++i) {
    const double u = lo + (hi - lo) * i / (n - 1);
    const double v = s.eval(u);
    if (v <= prev) return false;
    prev = v;
  }
  return true;
}

}  // namespace

std::optional<SigmoidalWindow> validate_window(const NarrowNet& rho, double a, double b,
                                               int grid_n, std::uint64_t seed) {
  if (!(a < b)) return std::nullopt;
  const auto xs = jittered_grid({a, b}, grid_n, seed);
  std::vector<double> vs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) vs[i] = forward_scalar(rho, xs[i]);

  for (std::size_t i = 1; i < vs.size(); ++i) {
    if (!(vs[i] > vs[i - 1])) return std::nullopt;  // strict increase, zero tie tolerance
  }

  const double rho_a = vs.front();
  const double rho_b = vs.back();
  const double slope = (rho_b - rho_a) / (b - a);
  int switch_idx = -1;
  for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
    const double d = vs[i] - (rho_a + slope * (xs[i] - a));
    if (d == 0.0) return std::nullopt;
    if (d > 0.0) {
      if (switch_idx < 0) switch_idx = static_cast<int>(i);
    } else if (switch_idx >= 0) {
      return std::nullopt;  // fell back below the chord: not a single crossing
    }
  }
  if (switch_idx <= 0) return std::nullopt;  // never above, or above from the start

  auto diff = [&](double x) {
    return forward_scalar(rho, x) - (rho_a + slope * (x - a));
  };
  const double c = bisect(diff, xs[static_cast<std::size_t>(switch_idx - 1)],
                          xs[static_cast<std::size_t>(switch_idx)]);
  if (!(c > a && c < b)) return std::nullopt;
  return SigmoidalWindow{a, b, c, rho_a, rho_b};
}

std::optional<SigmoidalWindow> find_sigmoidal_window(const NarrowNet& rho, Interval search,
                                                     int grid_n, std::uint64_t seed) {
  if (grid_n < 100) {
    fail(ErrorKind::InvalidArgument, "find_sigmoidal_window", "grid_n must be >= 100");
  }
  // Boundaries of maximal strictly-increasing runs make the natural anchors;
  // sharpen them by bisection on a local finite difference.
  {
    const int nf = std::max(grid_n, 1000);
    const double h = search.length() / nf;
    auto increasing_at = [&](double x) {
      return forward_scalar(rho, x + 1e-4 * h) > forward_scalar(rho, x);
    };
    auto boundary = [&](double lo, double hi) {
      for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (increasing_at(mid) == increasing_at(hi)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      return 0.5 * (lo + hi);
    };
    std::vector<double> vs(static_cast<std::size_t>(nf) + 1);
    for (int i = 0; i <= nf; ++i) {
      vs[static_cast<std::size_t>(i)] = forward_scalar(rho, search.lo + i * h);
    }
    int i = 0;
    while (i < nf) {
      if (!(vs[static_cast<std::size_t>(i + 1)] > vs[static_cast<std::size_t>(i)])) {
        ++i;
        continue;
      }
      int j = i;
      while (j < nf && vs[static_cast<std::size_t>(j + 1)] > vs[static_cast<std::size_t>(j)]) {
        ++j;
      }
      if (j - i >= nf / 100) {
        double a = search.lo + i * h;
        double b = search.lo + j * h;
        if (i > 0) a = boundary(a - h, a);
        if (j < nf) b = boundary(b, b + h);
        if (auto full = validate_window(rho, a, b, grid_n, seed)) return full;
      }
      i = j;
    }
  }
  const int n_scan = std::min(120, grid_n);
  std::vector<double> anchors(static_cast<std::size_t>(n_scan));
  for (int i = 0; i < n_scan; ++i) {
    anchors[static_cast<std::size_t>(i)] = search.lo + search.length() * i / (n_scan - 1);
  }
  for (int i = 0; i < n_scan; ++i) {
    for (int j = n_scan - 1; j > i + 1; --j) {  // widest window for each left anchor first
      const double a = anchors[static_cast<std::size_t>(i)];
      const double b = anchors[static_cast<std::size_t>(j)];
      if (auto quick = validate_window(rho, a, b, 48, seed)) {
        if (auto full = validate_window(rho, a, b, grid_n, seed + 1)) return full;
      }
    }
  }
  return std::nullopt;
}

namespace {

// psi(u) = sigma_hat(b*u) / sigma_hat(b) as a width-1 net.
NarrowNet scaled_psi(const Normalized& s, double b) {
  const double denom = s.eval(b);
  return wrap_sigma(s.act, s.in_sign * b, s.x0, s.out_sign / denom,
                    -s.out_sign * s.y0 / denom);
}

// rho(u) = 1 - psi(1 - psi(u)).
NarrowNet double_fold(const NarrowNet& psi) {
  return compose(compose(compose(psi, one_minus()), psi), one_minus());
}

std::optional<SigmoidalBase> try_fold_window(const NarrowNet& rho) {
  // Fixed points of rho - id in (0,1); window is [0,1] for a single interior
  // crossing and [0, c2] when several exist.
  const int n = 4096;
  std::vector<double> crossings;
  double prev = forward_scalar(rho, 1.0 / n) - 1.0 / n;
  for (int i = 2; i < n && crossings.size() < 4; ++i) {
    const double u = static_cast<double>(i) / n;
    const double d = forward_scalar(rho, u) - u;
    if ((prev < 0.0 && d >= 0.0) || (prev > 0.0 && d <= 0.0)) {
      auto f = [&](double x) { return forward_scalar(rho, x) - x; };
      crossings.push_back(bisect(f, (i - 1.0) / n, u));
    }
    prev = d;
  }
  if (crossings.empty()) return std::nullopt;
  double hi = 1.0;
  if (crossings.size() >= 2) hi = crossings[1];
  if (auto w = validate_window(rho, 0.0, hi, 4000)) return SigmoidalBase{rho, *w};
  return std::nullopt;
}

SigmoidalBase build_inflection(const ActPtr& act, const InflectionCert& cert) {
  const double c = cert.c;
  const double half = cert.delta / 2.0;
  const double sc = act->eval(c);
  const double rise_l = sc - act->eval(c - half);
  const double rise_r = act->eval(c + half) - sc;
  const double alpha = std::max(rise_l, rise_r);
  const double slope = alpha / half;
  auto line_diff = [&](double x) { return act->eval(x) - (sc + slope * (x - c)); };

  double a, b;
  if (rise_l >= rise_r) {
    a = c - half;
    b = bisect(line_diff, c + 1e-9 * half, c + half);
  } else {
    b = c + half;
    a = bisect(line_diff, c - half, c - 1e-9 * half);
  }
  NarrowNet rho = wrap_sigma(act, 1.0, 0.0, 1.0, 0.0);
  if (auto w = validate_window(rho, a, b, 10000)) return SigmoidalBase{rho, *w};
  fail(ErrorKind::NoWindowFound, "build_sigmoidal_base",
       "inflection window failed chord validation");
}

SigmoidalBase build_critical_or_convex(const ActPtr& act, double base_c, Interval b_search,
                                       bool critical) {
  std::vector<double> base_candidates;
  if (critical) {
    base_candidates = {base_c};
  } else {
    base_candidates = {0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0};
  }
  const auto ladder = log_ladder(b_search.lo, b_search.hi, 48);
  for (double x0 : base_candidates) {
    for (double in_sign : {1.0, -1.0}) {
      for (double out_sign : {1.0, -1.0}) {
        Normalized s{act, x0, act->eval(x0), in_sign, out_sign};
        const double probe = 1e-3;
        if (!(s.eval(probe) > 0.0 && s.eval(2 * probe) > s.eval(probe))) continue;
        for (double b : ladder) {
          if (!(s.eval(b) > 0.0) || !increasing_on(s, 0.0, b)) continue;
          NarrowNet rho = double_fold(scaled_psi(s, b));
          const double h = 1e-5;
          const double d0 = forward_scalar(rho, h) / h;
          if (!(d0 < 1.0 - 1e-9)) continue;  // needs rho'(0) < 1 to dip below the diagonal
          if (auto base = try_fold_window(rho)) return *base;
        }
      }
    }
  }
  fail(ErrorKind::NoWindowFound, "build_sigmoidal_base",
       critical ? "critical-point scan exhausted" : "convexity scan exhausted");
}

SigmoidalBase build_kink(const ActPtr& act, const KinkCert& cert) {
  if (!(cert.v_minus != cert.v_plus && cert.v_minus * cert.v_plus > 0.0)) {
    fail(ErrorKind::CertificateInvalid, "build_sigmoidal_base",
         "kink slopes must differ and share a sign (v_minus=" +
             std::to_string(cert.v_minus) + ", v_plus=" + std::to_string(cert.v_plus) + ")");
  }
  // Orient so the normalized copy increases with the smaller slope on the left.
  const double y0 = act->eval(cert.c);
  for (double r = 1.0; r >= 1e-8; r *= 0.5) {
    for (double in_sign : {1.0, -1.0}) {
      for (double out_sign : {1.0, -1.0}) {
        Normalized s{act, cert.c, y0, in_sign, out_sign};
        const double t = 1e-3 * r;
        const double sl = (s.eval(0.0) - s.eval(-t)) / t;
        const double sr = (s.eval(t) - s.eval(0.0)) / t;
        if (!(sl > 0.0 && sr > sl)) continue;
        const double s_hat = s.eval(r) / r;  // right-slope estimate at scale r
        if (!(s_hat > 0.0)) continue;
        NarrowNet psi = wrap_sigma(act, s.in_sign * r, s.x0, s.out_sign / (r * s_hat),
                                   -s.out_sign * s.y0 / (r * s_hat));
        NarrowNet rho = double_fold(psi);
        if (auto w = validate_window(rho, -1.0, 2.0, 4000)) return SigmoidalBase{rho, *w};
        if (auto w = find_sigmoidal_window(rho, {-1.0, 2.0}, 2000)) {
          return SigmoidalBase{rho, *w};
        }
      }
    }
  }
  fail(ErrorKind::NoWindowFound, "build_sigmoidal_base", "kink scale scan exhausted");
}

}  // namespace

SigmoidalBase build_sigmoidal_base(const ActPtr& act) {
  if (!act) fail(ErrorKind::InvalidArgument, "build_sigmoidal_base", "null activation");
  CertificateKind cert = act->certificate;
  if (std::holds_alternative<MonotoneLimitCert>(cert)) {
    if (!act->window_fallback) {
      fail(ErrorKind::InvalidArgument, "build_sigmoidal_base",
           "monotone-limit certificates bypass the window machinery");
    }
    cert = *act->window_fallback;
  }
  if (const auto* c = std::get_if<InflectionCert>(&cert)) return build_inflection(act, *c);
  if (const auto* c = std::get_if<CriticalPointCert>(&cert)) {
    return build_critical_or_convex(act, c->c, c->b_search, true);
  }
  if (const auto* c = std::get_if<AnalyticConvexCert>(&cert)) {
    return build_critical_or_convex(act, 0.0, c->b_search, false);
  }
  if (const auto* c = std::get_if<KinkCert>(&cert)) return build_kink(act, *c);
  if (const auto* c = std::get_if<DirectWindowCert>(&cert)) {
    if (!c->net) fail(ErrorKind::InvalidArgument, "build_sigmoidal_base", "missing net");
    if (auto w = validate_window(*c->net, c->a, c->b, 10000)) {
      return SigmoidalBase{*c->net, *w};
    }
    fail(ErrorKind::NoWindowFound, "build_sigmoidal_base", "direct window failed validation");
  }
  fail(ErrorKind::InvalidArgument, "build_sigmoidal_base", "unhandled certificate kind");
}

}  // namespace minwidth
