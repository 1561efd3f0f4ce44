#include "minwidth/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace minwidth {

const TrackedInterval* FillingCurve::find_tracked(const CellIndex& nu) const {
  for (const auto& t : tracked) {
    if (t.nu == nu) return &t;
  }
  return nullptr;
}

NarrowNet build_indicator(const StepFactory& steps, std::vector<double> z, double gamma, int N,
                          const IndicatorOptions& opts) {
  if (z.empty()) fail(ErrorKind::InvalidArgument, "build_indicator", "no z points");
  std::sort(z.begin(), z.end());
  for (double v : z) {
    if (!(v > 0.0 && v < 1.0)) {
      fail(ErrorKind::InvalidArgument, "build_indicator", "z points must lie in (0,1)");
    }
  }
  if (z.size() % 2 == 1) {
    // Auxiliary point to make the count even (the recursion pairs them up).
    const double aux = 0.5 * (z.back() + 1.0);
    if (!(aux - z.back() > 2.0 * gamma && 1.0 - aux > gamma)) {
      fail(ErrorKind::GapTooSmall, "build_indicator",
           "no room for the auxiliary z point at gamma=" + std::to_string(gamma));
    }
    z.push_back(aux);
  }
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < z.size(); ++i) min_gap = std::min(min_gap, z[i] - z[i - 1]);
  if (!(gamma > 0.0 && gamma < min_gap / 2.0)) {
    fail(ErrorKind::GapTooSmall, "build_indicator", "need gamma < min pairwise gap / 2");
  }

  const int m = static_cast<int>(z.size()) / 2;
  const double eps_step = opts.eps_override > 0.0 ? opts.eps_override : 1.0 / (4.0 * N);
  const double zeta_step = opts.zeta_override > 0.0 ? opts.zeta_override : gamma / 2.0;

  StepApproximator rho;
  try {
    rho = steps(Interval{-2.5, 2.5}, eps_step, zeta_step);
  } catch (const BuildError& e) {
    fail(ErrorKind::StepBuildFailed, "build_indicator", e.what());
  }

  // z with the boundary sentinels z_0 = 0 and z_{2m+1} = 1, 1-based access.
  auto zi = [&](int i) -> double {
    if (i == 0) return 0.0;
    if (i == 2 * m + 1) return 1.0;
    return z[static_cast<std::size_t>(i - 1)];
  };

  // State (x, s); level 1 seeds s = rho(x - z_{m+1}).
  AffineLayer seed;
  seed.W.resize(2, 1);
  seed.W << 1.0, 1.0;
  seed.b.resize(2);
  seed.b << 0.0, -zi(m + 1);
  NarrowNet net = compose(affine_net(seed), lift(rho.net, 2, {2}));

  for (int l = 2; l <= m + 1; ++l) {
    const double za = zi(m - l + 2);
    const double zb = zi(m + l);
    AffineLayer mix;  // (x, s) -> (x, x - za + (za - zb) s)
    mix.W.resize(2, 2);
    mix.W << 1.0, 0.0, 1.0, (za - zb);
    mix.b.resize(2);
    mix.b << 0.0, -za;
    net = compose(net, compose(affine_net(mix), lift(rho.net, 2, {2})));
  }
  return net;
}

namespace {

// Flattest sampled point per tracked interval, plus the flat-subset marking
// used by code points and the decoder modulus.
void compute_anchors(FillingCurve& curve) {
  std::vector<double> slopes;
  slopes.reserve(curve.tracked.size());
  for (auto& t : curve.tracked) {
    const double r0 = std::max(t.iv.length() / 64.0, 1e-15);
    double best_slope = std::numeric_limits<double>::infinity();
    double best_x = t.iv.mid();
    for (int i = 1; i < 32; ++i) {
      const double x = t.iv.lo + t.iv.length() * i / 32.0;
      const Eigen::VectorXd lo = forward(curve.net, Eigen::VectorXd::Constant(1, x - r0));
      const Eigen::VectorXd hi = forward(curve.net, Eigen::VectorXd::Constant(1, x + r0));
      const double slope = (hi - lo).lpNorm<Eigen::Infinity>() / (2.0 * r0);
      if (slope < best_slope) {
        best_slope = slope;
        best_x = x;
      }
    }
    t.anchor = best_x;
    t.slope = best_slope;
    slopes.push_back(best_slope);
  }
  std::sort(slopes.begin(), slopes.end());
  // Flat anchors only: cascaded transitions reach astronomically steep
  // slopes, and one steep anchor would poison the decoder modulus table.
  const double cut = std::max(slopes[static_cast<std::size_t>(0.25 * (slopes.size() - 1))],
                              std::min(slopes.back(), 64.0 * curve.N));
  for (auto& t : curve.tracked) t.selectable = t.slope <= cut;
}

}  // namespace

FillingCurve extend_filling_curve(const FillingCurve& curve, const StepFactory& steps) {
  if (curve.tracked.empty()) {
    fail(ErrorKind::InvalidArgument, "extend_filling_curve", "curve has no tracked intervals");
  }
  double min_len = std::numeric_limits<double>::infinity();
  for (const auto& t : curve.tracked) min_len = std::min(min_len, t.iv.length());
  const int N = curve.N;

  std::vector<double> zs;
  zs.reserve(curve.tracked.size());
  for (const auto& t : curve.tracked) zs.push_back(t.iv.mid());

  double gamma = min_len / 4.0;
  if (zs.size() % 2 == 1) {
    // An auxiliary z lands at the midpoint of (z_max, 1); gamma must respect
    // that gap too.
    gamma = std::min(gamma, 0.9 * (1.0 - *std::max_element(zs.begin(), zs.end())) / 4.0);
  }

  IndicatorOptions iopts;
  for (int attempt = 0; attempt < 4; ++attempt) {
    NarrowNet phi = build_indicator(steps, zs, gamma, N, iopts);

    // phi(x)_2 alone decides the new coordinate; the first output is x itself.
    NarrowNet phi2 = compose(phi, affine_net(AffineLayer{
                                      (Eigen::MatrixXd(1, 2) << 0.0, 1.0).finished(),
                                      Eigen::VectorXd::Zero(1)}));

    bool all_found = true;
    std::vector<TrackedInterval> new_tracked;
    const int scan_n = 1000;
    std::vector<double> vals(static_cast<std::size_t>(scan_n) + 1);
    for (const auto& parent : curve.tracked) {
      const CellIndex& nu = parent.nu;
      const Interval& iv = parent.iv;
      const double h = iv.length() / scan_n;
      for (int i = 0; i <= scan_n; ++i) {
        vals[static_cast<std::size_t>(i)] = forward_scalar(phi2, iv.lo + i * h);
      }
      for (int j = 1; j <= N && all_found; ++j) {
        const Interval band{(j - 1) / static_cast<double>(N), j / static_cast<double>(N)};
        const double center = (2.0 * j - 1.0) / (2.0 * N);
        // A scan point near the band center, or a bracketing pair sharpened by
        // bisection when the transition is steeper than the scan resolution.
        int best = -1;
        double best_dist = 1.0 / (4.0 * N);
        for (int i = 0; i <= scan_n; ++i) {
          const double d = std::abs(vals[static_cast<std::size_t>(i)] - center);
          if (d < best_dist) {
            best_dist = d;
            best = i;
          }
        }
        double x_star;
        if (best >= 0) {
          x_star = iv.lo + best * h;
        } else {
          int bracket = -1;
          for (int i = 0; i < scan_n; ++i) {
            const double d0 = vals[static_cast<std::size_t>(i)] - center;
            const double d1 = vals[static_cast<std::size_t>(i + 1)] - center;
            if (d0 == 0.0 || d0 * d1 < 0.0) {
              bracket = i;
              break;
            }
          }
          if (bracket < 0) {
            if (getenv("MW_DBG")) fprintf(stderr, "DBG no-bracket nu0=%d j=%d\n", nu[0], j);
            all_found = false;
            break;
          }
          double a = iv.lo + bracket * h;
          double b = a + h;
          double da = vals[static_cast<std::size_t>(bracket)] - center;
          for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (a + b);
            const double dm = forward_scalar(phi2, mid) - center;
            if ((da <= 0.0) == (dm <= 0.0)) {
              a = mid;
              da = dm;
            } else {
              b = mid;
            }
          }
          x_star = 0.5 * (a + b);
          if (!band.contains(forward_scalar(phi2, x_star))) {
            if (getenv("MW_DBG")) fprintf(stderr, "DBG sub-ulp nu0=%d j=%d v=%.17g\n", nu[0], j, forward_scalar(phi2, x_star));
            all_found = false;  // transition narrower than a double ulp
            break;
          }
        }
        // Maximal in-band reach around x_star; edges located by bisection
        // between the known in-band reach and the nearest out-of-band point.
        auto edge = [&](bool left) {
          double in = x_star;
          double out = std::numeric_limits<double>::quiet_NaN();
          int i = left ? static_cast<int>(std::floor((x_star - iv.lo) / h))
                       : static_cast<int>(std::ceil((x_star - iv.lo) / h));
          while (i >= 0 && i <= scan_n) {
            if (!band.contains(vals[static_cast<std::size_t>(i)])) {
              out = iv.lo + i * h;
              break;
            }
            in = iv.lo + i * h;
            i += left ? -1 : 1;
          }
          if (std::isnan(out)) return left ? iv.lo : iv.hi;
          for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (in + out);
            if (band.contains(forward_scalar(phi2, mid))) {
              in = mid;
            } else {
              out = mid;
            }
          }
          return in;
        };
        double jlo = edge(true);
        double jhi = edge(false);
        // Composed transitions can be steep; never shrink a thin interval away.
        const double shrink = std::min(1e-9, 0.05 * (jhi - jlo));
        jlo += shrink;
        jhi -= shrink;
        if (!(jlo < jhi)) {
          if (getenv("MW_DBG")) fprintf(stderr, "DBG thin-J nu0=%d j=%d\n", nu[0], j);
          all_found = false;
          break;
        }
        CellIndex idx = nu;
        idx.push_back(j);
        TrackedInterval entry;
        entry.nu = std::move(idx);
        entry.iv = Interval{jlo, jhi};
        new_tracked.push_back(std::move(entry));
      }
      if (!all_found) break;
    }

    if (all_found) {
      FillingCurve out;
      out.N = N;
      out.dim = curve.dim + 1;
      out.net = compose(curve.net, embed(phi, curve.dim, {1}, curve.dim + 1,
                                         {1, curve.dim + 1}));
      std::sort(new_tracked.begin(), new_tracked.end(),
                [](const auto& a, const auto& b) { return a.iv.lo < b.iv.lo; });
      for (std::size_t i = 1; i < new_tracked.size(); ++i) {
        if (new_tracked[i].iv.lo <= new_tracked[i - 1].iv.hi) {
          fail(ErrorKind::BandNotFound, "extend_filling_curve",
               "located sub-intervals overlap");
        }
      }
      out.tracked = std::move(new_tracked);
      compute_anchors(out);
      return out;
    }
    // Tighten the inner step nets and retry.
    iopts.eps_override = (iopts.eps_override > 0.0 ? iopts.eps_override : 1.0 / (4.0 * N)) * 0.5;
    iopts.zeta_override =
        (iopts.zeta_override > 0.0 ? iopts.zeta_override : gamma / 2.0) * 0.5;
  }
  fail(ErrorKind::BandNotFound, "extend_filling_curve",
       "band coverage failed after 3 tightened retries");
}

FillingCurve build_filling_curve(int N, int d, const StepFactory& steps) {
  if (N < 1 || d < 1) fail(ErrorKind::InvalidArgument, "build_filling_curve", "N, d >= 1");
  FillingCurve curve;
  curve.N = N;
  curve.dim = 1;
  curve.net = identity_net(1);
  const double shrink = 1e-9;
  for (int i = 1; i <= N; ++i) {
    TrackedInterval t;
    t.nu = CellIndex{i};
    t.iv = Interval{(i - 1.0) / N + shrink, static_cast<double>(i) / N - shrink};
    t.anchor = t.iv.mid();
    t.slope = 1.0;
    curve.tracked.push_back(std::move(t));
  }
  for (int k = 1; k < d; ++k) curve = extend_filling_curve(curve, steps);
  return curve;
}

std::vector<CodePoint> pick_code_points(const FillingCurve& curve,
                                        const std::vector<Eigen::VectorXd>& targets,
                                        double delta, double ball_radius) {
  std::vector<Eigen::VectorXd> images;
  images.reserve(curve.tracked.size());
  for (const auto& t : curve.tracked) {
    images.push_back(forward(curve.net, Eigen::VectorXd::Constant(1, t.anchor)));
  }

  auto slope_at = [&](double x, double r) {
    const Eigen::VectorXd lo = forward(curve.net, Eigen::VectorXd::Constant(1, std::max(0.0, x - r)));
    const Eigen::VectorXd hi = forward(curve.net, Eigen::VectorXd::Constant(1, std::min(1.0, x + r)));
    return (hi - lo).lpNorm<Eigen::Infinity>() / (2.0 * r);
  };

  // Best point of a tracked interval under dist + slope * ball_radius; the
  // distance along these curves is not unimodal, so scan coarse-to-fine and
  // keep the best seen.
  auto refine = [&](const TrackedInterval& t, const Eigen::VectorXd& y) {
    double best_x = t.anchor;
    double best_obj = std::numeric_limits<double>::infinity();
    double best_dist = 0.0, best_slope = 0.0;
    Interval window = t.iv;
    const int n = 256;
    for (int level = 0; level < 4; ++level) {
      const double r_probe = std::max({window.length() / 512.0, ball_radius, 1e-15});
      int best_i = -1;
      for (int i = 0; i <= n; ++i) {
        const double x = window.lo + window.length() * i / n;
        const double d =
            (forward(curve.net, Eigen::VectorXd::Constant(1, x)) - y).lpNorm<Eigen::Infinity>();
        if (d >= best_obj) continue;  // slope can only add
        const double sl = slope_at(x, r_probe);
        const double obj = d + sl * ball_radius;
        if (obj < best_obj) {
          best_obj = obj;
          best_x = x;
          best_dist = d;
          best_slope = sl;
          best_i = i;
        }
      }
      if (best_i < 0 || window.length() < 1e-13) break;
      const double h = window.length() / n;
      window = Interval{std::max(t.iv.lo, best_x - 2.0 * h), std::min(t.iv.hi, best_x + 2.0 * h)};
    }
    CodePoint cp;
    cp.nu = t.nu;
    cp.c = best_x;
    cp.target = y;
    cp.dist = best_dist;
    cp.local_slope = best_slope;
    return cp;
  };

  std::vector<CodePoint> out;
  out.reserve(targets.size());
  for (const auto& y : targets) {
    if (y.size() != curve.dim) {
      fail(ErrorKind::DimensionMismatch, "pick_code_points", "target dim != curve dim");
    }
    // Flat anchors first.
    int best_i = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < curve.tracked.size(); ++i) {
      if (!curve.tracked[i].selectable) continue;
      const double d = (images[i] - y).lpNorm<Eigen::Infinity>();
      if (d < best_d) {
        best_d = d;
        best_i = static_cast<int>(i);
      }
    }
    if (best_i >= 0 && best_d <= delta + 1e-12) {
      const TrackedInterval& t = curve.tracked[static_cast<std::size_t>(best_i)];
      CodePoint cp = refine(t, y);
      if (cp.dist <= delta + 1e-12) {
        out.push_back(std::move(cp));
        continue;
      }
    }
    // Refinement sweep over the nearest intervals.
    std::vector<std::size_t> order(curve.tracked.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return (images[a] - y).lpNorm<Eigen::Infinity>() <
             (images[b] - y).lpNorm<Eigen::Infinity>();
    });
    // Among distance-feasible candidates take the one an encoder ball hurts
    // least; distance alone decides feasibility.
    CodePoint best;
    double best_obj = std::numeric_limits<double>::infinity();
    const std::size_t sweep =
        order.size() <= 128 ? order.size() : std::max<std::size_t>(16, order.size() / 8);
    for (std::size_t k = 0; k < sweep; ++k) {
      CodePoint cp = refine(curve.tracked[order[k]], y);
      if (cp.dist > delta + 1e-12) continue;
      const double obj = cp.dist + cp.local_slope * ball_radius;
      if (obj < best_obj) {
        best_obj = obj;
        best = std::move(cp);
      }
    }
    if (best.target.size() == 0) {
      fail(ErrorKind::CodePointInfeasible, "pick_code_points",
           "curve granularity too coarse for delta=" + std::to_string(delta));
    }
    out.push_back(std::move(best));
  }
  return out;
}

CoverageReport verify_coverage(const FillingCurve& curve, double radius, int grid_per_axis,
                               int curve_samples, std::uint64_t seed) {
  CoverageReport rep;
  const int d = curve.dim;
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(static_cast<std::size_t>(curve_samples));
  {
    Rng rng(seed);
    for (int i = 0; i < curve_samples; ++i) {
      const double t =
          std::clamp((i + uniform(rng, 0.0, 1.0)) / curve_samples, 0.0, 1.0);
      samples.push_back(forward(curve.net, Eigen::VectorXd::Constant(1, t)));
    }
  }
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd y(d);
  rep.worst_uncovered = 0.0;
  while (true) {
    for (int i = 0; i < d; ++i) {
      y[i] = grid_per_axis == 1 ? 0.5
                                : idx[static_cast<std::size_t>(i)] /
                                      static_cast<double>(grid_per_axis - 1);
    }
    ++rep.targets;
    bool covered = false;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
      const double dist = (s - y).lpNorm<Eigen::Infinity>();
      if (dist <= radius) {
        covered = true;
        break;
      }
      best = std::min(best, dist);
    }
    if (covered) {
      ++rep.covered;
    } else {
      rep.worst_uncovered = std::max(rep.worst_uncovered, best);
    }
    int k = 0;
    while (k < d && ++idx[static_cast<std::size_t>(k)] == grid_per_axis) {
      idx[static_cast<std::size_t>(k)] = 0;
      ++k;
    }
    if (k == d) break;
  }
  rep.pass = rep.covered == rep.targets;
  return rep;
}

ContainmentReport verify_containment(const FillingCurve& curve, int samples_per_interval,
                                     std::uint64_t seed) {
  ContainmentReport rep;
  rep.disjoint = true;
  std::vector<std::pair<double, double>> spans;
  for (const auto& t : curve.tracked) spans.emplace_back(t.iv.lo, t.iv.hi);
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first <= spans[i - 1].second) rep.disjoint = false;
  }

  const double tol = 1e-9;
  rep.cubes_ok = true;
  rep.range_ok = true;
  Rng rng(seed);
  for (const auto& tr : curve.tracked) {
    for (int s = 0; s < samples_per_interval; ++s) {
      const double t = uniform(rng, tr.iv.lo, tr.iv.hi);
      const Eigen::VectorXd v = forward(curve.net, Eigen::VectorXd::Constant(1, t));
      for (int i = 0; i < curve.dim; ++i) {
        const double lo = (tr.nu[static_cast<std::size_t>(i)] - 1.0) / curve.N;
        const double hi = tr.nu[static_cast<std::size_t>(i)] / static_cast<double>(curve.N);
        const double viol = std::max(lo - tol - v[i], v[i] - hi - tol);
        if (viol > 0.0) {
          rep.cubes_ok = false;
          rep.worst_cube_violation = std::max(rep.worst_cube_violation, viol);
        }
        const double rviol = std::max(-tol - v[i], v[i] - 1.0 - tol);
        if (rviol > 0.0) {
          rep.range_ok = false;
          rep.worst_range_violation = std::max(rep.worst_range_violation, rviol);
        }
      }
    }
  }
  rep.pass = rep.disjoint && rep.cubes_ok && rep.range_ok;
  return rep;
}

ModulusTable code_modulus_table(const FillingCurve& curve, double p, int pairs_per_radius,
                                std::uint64_t seed) {
  double min_len = std::numeric_limits<double>::infinity();
  for (const auto& t : curve.tracked) min_len = std::min(min_len, t.iv.length());
  const auto ladder = log_ladder(std::max(1e-12, 1e-6 * min_len), 0.5, 50);

  Rng rng(seed);
  ModulusTable table;
  table.radii = ladder;
  table.omega.assign(ladder.size(), 0.0);
  for (const auto& t : curve.tracked) {
    if (!t.selectable) continue;  // code points come from the flat subset
    const double c = t.anchor;
    const Eigen::VectorXd fc = forward(curve.net, Eigen::VectorXd::Constant(1, c));
    for (std::size_t li = 0; li < ladder.size(); ++li) {
      const double r = ladder[li];
      double worst = 0.0;
      for (int k = 0; k < pairs_per_radius; ++k) {
        const double t = k % 2 == 0 ? (k % 4 == 0 ? r : -r) : uniform(rng, -r, r);
        const double u = std::clamp(c + t, 0.0, 1.0);
        const Eigen::VectorXd fu = forward(curve.net, Eigen::VectorXd::Constant(1, u));
        worst = std::max(worst, norm_p(fu - fc, p));
      }
      table.omega[li] = std::max(table.omega[li], 1.5 * worst);
    }
  }
  for (std::size_t i = 1; i < table.omega.size(); ++i) {
    table.omega[i] = std::max(table.omega[i], table.omega[i - 1]);
  }
  return table;
}

void save_tracked_csv(const FillingCurve& curve, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) fail(ErrorKind::IoError, "save_tracked_csv", "cannot open " + tmp);
    out << "nu,interval_lo,interval_hi\n";
    out.precision(17);
    for (const auto& t : curve.tracked) {
      for (std::size_t i = 0; i < t.nu.size(); ++i) {
        if (i) out << ' ';
        out << t.nu[i];
      }
      out << ',' << t.iv.lo << ',' << t.iv.hi << '\n';
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    fail(ErrorKind::IoError, "save_tracked_csv", "rename failed");
  }
}

}  // namespace minwidth
