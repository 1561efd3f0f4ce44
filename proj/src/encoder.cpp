#include "minwidth/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace minwidth {

void GridSpec::check() const {
  if (axes.empty()) fail(ErrorKind::InvalidArgument, "GridSpec", "no axes");
  for (const auto& axis : axes) {
    if (axis.empty()) fail(ErrorKind::InvalidArgument, "GridSpec", "empty axis");
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (!(axis[i].lo <= axis[i].hi)) {
        fail(ErrorKind::InvalidArgument, "GridSpec", "inverted interval");
      }
      if (i > 0 && !(axis[i].lo > axis[i - 1].hi)) {
        fail(ErrorKind::InvalidArgument, "GridSpec", "axis intervals must be sorted, disjoint");
      }
    }
  }
}

std::vector<CellIndex> CellPartition::all_cells() const {
  std::vector<CellIndex> cells;
  CellIndex nu(static_cast<std::size_t>(dx), 1);
  while (true) {
    cells.push_back(nu);
    int k = 0;
    while (k < dx && ++nu[static_cast<std::size_t>(k)] > N) {
      nu[static_cast<std::size_t>(k)] = 1;
      ++k;
    }
    if (k == dx) break;
  }
  return cells;
}

BoxDomain CellPartition::cell_box(const CellIndex& nu) const {
  BoxDomain box;
  for (int i = 0; i < dx; ++i) box.dims.push_back(axis_cell(nu[static_cast<std::size_t>(i)]));
  return box;
}

Eigen::VectorXd CellPartition::cell_center(const CellIndex& nu) const {
  Eigen::VectorXd c(dx);
  for (int i = 0; i < dx; ++i) c[i] = axis_cell(nu[static_cast<std::size_t>(i)]).mid();
  return c;
}

bool CellPartition::cell_contains(const CellIndex& nu, const Eigen::VectorXd& x) const {
  for (int i = 0; i < dx; ++i) {
    if (!axis_cell(nu[static_cast<std::size_t>(i)]).contains(x[i])) return false;
  }
  return true;
}

NarrowNet build_separator(double b, double r, double xi, double eta, const StepFactory& steps,
                          const BoxDomain& k) {
  if (!(r > 0.0)) fail(ErrorKind::InvalidArgument, "build_separator", "r must be > 0");
  if (!(xi > 0.0 && xi < 0.5)) {
    fail(ErrorKind::InvalidArgument, "build_separator", "xi must be in (0, 0.5)");
  }
  if (k.dim() != 2) fail(ErrorKind::InvalidArgument, "build_separator", "K must be 2-d");
  const Interval x1 = k.dims[0];
  StepApproximator rho;
  try {
    rho = steps(Interval{x1.lo - b - 1.0, x1.hi - b + 1.0}, xi, eta);
  } catch (const BuildError& e) {
    fail(ErrorKind::StepBuildFailed, "build_separator", e.what());
  }

  AffineLayer shear;  // A = [[1,0],[-r,1]]
  shear.W.resize(2, 2);
  shear.W << 1.0, 0.0, -r, 1.0;
  shear.b = Eigen::VectorXd::Zero(2);
  AffineLayer unshear;
  unshear.W.resize(2, 2);
  unshear.W << 1.0, 0.0, r, 1.0;
  unshear.b = Eigen::VectorXd::Zero(2);

  NarrowNet mid = lift(compose(affine_net(affine_scalar(1.0, -b)), rho.net), 2, {1});
  return compose(compose(affine_net(shear), mid), affine_net(unshear));
}

namespace {

struct CellSamples {
  CellIndex nu;
  int block = 0;  // first-axis interval index, 1-based
  std::size_t offset = 0;
  std::size_t count = 0;
};

}  // namespace

FlattenResult flatten_2grid(const GridSpec& grid, const StepFactory& steps, Interval in2) {
  grid.check();
  if (grid.dim() != 2) fail(ErrorKind::InvalidArgument, "flatten_2grid", "need a 2-grid");
  const auto& ax1 = grid.axes[0];
  const auto& ax2 = grid.axes[1];
  const int n1 = static_cast<int>(ax1.size());
  const int n2 = static_cast<int>(ax2.size());
  if (in2.length() <= 0.0) in2 = Interval{ax2.front().lo, ax2.back().hi};
  in2.lo = std::min(in2.lo, ax2.front().lo);
  in2.hi = std::max(in2.hi, ax2.back().hi);

  FlattenResult res;
  if (n1 == 1) {
    AffineLayer proj;
    proj.W.resize(1, 2);
    proj.W << 0.0, 1.0;
    proj.b = Eigen::VectorXd::Zero(1);
    res.net = affine_net(proj);
    for (int j = 1; j <= n2; ++j) {
      res.cells.push_back({CellIndex{1, j}, ax2[static_cast<std::size_t>(j - 1)]});
    }
    res.out_range = in2;
    return res;
  }

  const double L = ax2.back().hi - ax2.front().lo;
  double eta_v = std::numeric_limits<double>::infinity();
  for (int j = 1; j < n2; ++j) {
    eta_v = std::min(eta_v, ax2[static_cast<std::size_t>(j)].lo -
                               ax2[static_cast<std::size_t>(j - 1)].hi);
  }
  // Stricter than the Sum 2 r_k zeta < min{eta/2, 1/2} budget: the padded
  // sampled hulls eat 6x the accumulated error out of each gap, so keep the
  // total at min{eta, 1}/8.
  const double budget_cap = std::min(n2 >= 2 ? eta_v : 1.0, 1.0) / 8.0;
  double sum_rk = 0.0;
  for (int k = 2; k <= n1; ++k) sum_rk += (k - 1) * (L + 1.0);
  const double zeta_budget = std::min(0.45, budget_cap / (2.0 * sum_rk));

  // Per-cell sample points: corners plus a jittered 4x4 interior grid.
  std::vector<CellSamples> cells;
  std::vector<double> x1, x2;
  {
    Rng rng(321);
    for (int i = 1; i <= n1; ++i) {
      for (int j = 1; j <= n2; ++j) {
        CellSamples cs;
        cs.nu = {i, j};
        cs.block = i;
        cs.offset = x1.size();
        const Interval& u = ax1[static_cast<std::size_t>(i - 1)];
        const Interval& v = ax2[static_cast<std::size_t>(j - 1)];
        for (double a : {u.lo, u.hi}) {
          for (double b : {v.lo, v.hi}) {
            x1.push_back(a);
            x2.push_back(b);
          }
        }
        for (int a = 0; a < 4; ++a) {
          for (int b = 0; b < 4; ++b) {
            x1.push_back(u.lo + u.length() * (a + uniform(rng, 0.1, 0.9)) / 4.0);
            x2.push_back(v.lo + v.length() * (b + uniform(rng, 0.1, 0.9)) / 4.0);
          }
        }
        cs.count = x1.size() - cs.offset;
        cells.push_back(cs);
      }
    }
  }
  const std::size_t total_pts = x1.size();

  auto block_stat = [&](int block_lo, int block_hi, bool want_min) {
    double m = want_min ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
    for (const auto& c : cells) {
      if (c.block < block_lo || c.block > block_hi) continue;
      for (std::size_t i = c.offset; i < c.offset + c.count; ++i) {
        m = want_min ? std::min(m, x1[i]) : std::max(m, x1[i]);
      }
    }
    return m;
  };

  // h_1 parks the top block at first-coordinate height 1; h_k then shifts the
  // highest remaining block by r_k = (k-1)(L+1) while parking it as well.
  const double c1 = 0.5 * (ax1[static_cast<std::size_t>(n1 - 2)].hi +
                           ax1[static_cast<std::size_t>(n1 - 1)].lo);
  const double gap1 = ax1[static_cast<std::size_t>(n1 - 1)].lo -
                      ax1[static_cast<std::size_t>(n1 - 2)].hi;
  res.log["c1"] = {c1};
  res.log["zeta"] = {zeta_budget};
  res.log["eta"] = {n2 >= 2 ? eta_v : -1.0};  // -1: single row, no vertical gap
  res.log["L"] = {L};
  res.log["r_k"] = {};
  res.log["b_k"] = {};

  // First-coordinate steps carry block positions to later stages, so their
  // images must stay numerically distinct across the whole span.
  StepFactory pos_steps = steps;
  pos_steps.opts.preserve_resolution = true;

  NarrowNet net;
  {
    StepApproximator rho1;
    try {
      rho1 = pos_steps(Interval{std::min(0.0, ax1.front().lo) - c1 - 1.0,
                                std::max(1.0, ax1.back().hi) - c1 + 1.0},
                       zeta_budget, gap1 / 4.0);
    } catch (const BuildError& e) {
      fail(ErrorKind::StepBuildFailed, "flatten_2grid", e.what());
    }
    net = lift(compose(affine_net(affine_scalar(1.0, -c1)), rho1.net), 2, {1});
    for (std::size_t i = 0; i < total_pts; ++i) x1[i] = forward_scalar(rho1.net, x1[i] - c1);
  }

  double accumulated_error = 0.0;
  double sum_rk_applied = 0.0;
  for (int k = 2; k <= n1; ++k) {
    const double r_k = (k - 1) * (L + 1.0);
    res.log["r_k"].push_back(r_k);
    sum_rk_applied += r_k;
    const int y_block = n1 - k + 1;
    const double y_min = block_stat(y_block, y_block, true);
    const double parked_min = block_stat(y_block + 1, n1, true);
    double b_k, eta_k;
    if (y_block == 1) {
      b_k = y_min - 0.25;
      eta_k = std::min(0.25, parked_min - b_k);
    } else {
      const double below_max = block_stat(1, y_block - 1, false);
      b_k = 0.5 * (below_max + y_min);
      eta_k = std::min({y_min - b_k, b_k - below_max, parked_min - b_k});
    }
    if (!(eta_k > 0.0)) {
      fail(ErrorKind::BudgetInfeasible, "flatten_2grid",
           "first-coordinate blocks no longer separable at stage " + std::to_string(k));
    }
    res.log["b_k"].push_back(b_k);

    BoxDomain kbox;
    kbox.dims = {Interval{-0.5, 1.5}, Interval{-1.0, 1.0}};
    NarrowNet h_k = build_separator(b_k, r_k, zeta_budget, eta_k / 2.0, pos_steps, kbox);
    append(net, h_k);
    accumulated_error += 2.0 * r_k * zeta_budget;

    for (std::size_t i = 0; i < total_pts; ++i) {
      Eigen::Vector2d in(x1[i], x2[i]);
      Eigen::VectorXd out = forward(h_k, in);
      x1[i] = out[0];
      x2[i] = out[1];
    }
  }

  AffineLayer proj;
  proj.W.resize(1, 2);
  proj.W << 0.0, 1.0;
  proj.b = Eigen::VectorXd::Zero(1);
  append(net, affine_net(proj));
  res.net = std::move(net);

  const double pad = 2.0 * accumulated_error;
  res.log["pad"] = {pad};
  for (const auto& c : cells) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = c.offset; i < c.offset + c.count; ++i) {
      lo = std::min(lo, x2[i]);
      hi = std::max(hi, x2[i]);
    }
    res.cells.push_back({c.nu, Interval{lo - pad, hi + pad}});
  }
  std::sort(res.cells.begin(), res.cells.end(),
            [](const auto& a, const auto& b) { return a.second.lo < b.second.lo; });
  for (std::size_t i = 1; i < res.cells.size(); ++i) {
    if (!(res.cells[i].second.lo > res.cells[i - 1].second.hi)) {
      fail(ErrorKind::VerificationFailed, "flatten_2grid",
           "flattened cell images are not disjoint");
    }
  }
  // Every separator term r_k (rho - x1) stays in [-r_k, r_k]: step outputs and
  // parked first coordinates both live in [0, 1].
  res.out_range = Interval{in2.lo - sum_rk_applied, in2.hi + sum_rk_applied};
  return res;
}

FlattenResult flatten_dgrid(const GridSpec& grid, const StepFactory& steps,
                            BoxDomain input_hull) {
  grid.check();
  const int d = grid.dim();
  if (input_hull.dim() == 0) {
    for (const auto& axis : grid.axes) {
      input_hull.dims.push_back(Interval{axis.front().lo, axis.back().hi});
    }
  }
  if (input_hull.dim() != d) {
    fail(ErrorKind::DimensionMismatch, "flatten_dgrid", "input hull dim mismatch");
  }
  if (d == 1) {
    FlattenResult res;
    res.net = identity_net(1);
    for (std::size_t j = 0; j < grid.axes[0].size(); ++j) {
      res.cells.push_back({CellIndex{static_cast<int>(j) + 1}, grid.axes[0][j]});
    }
    res.out_range = input_hull.dims[0];
    return res;
  }

  // Tail (j_l, ..., j_d) of each cell index -> current last-axis interval.
  std::vector<std::pair<std::vector<int>, Interval>> last;
  for (std::size_t j = 0; j < grid.axes[static_cast<std::size_t>(d - 1)].size(); ++j) {
    last.push_back({{static_cast<int>(j) + 1}, grid.axes[static_cast<std::size_t>(d - 1)][j]});
  }
  Interval carried = input_hull.dims[static_cast<std::size_t>(d - 1)];

  FlattenResult res;
  NarrowNet net = identity_net(d);
  for (int l = d; l >= 2; --l) {
    GridSpec two;
    two.axes.resize(2);
    two.axes[0] = grid.axes[static_cast<std::size_t>(l - 2)];
    for (const auto& [tail, iv] : last) two.axes[1].push_back(iv);
    FlattenResult stage = flatten_2grid(two, steps, carried);
    for (const auto& [key, vals] : stage.log) {
      auto& dst = res.log["stage" + std::to_string(l) + "_" + key];
      dst.insert(dst.end(), vals.begin(), vals.end());
    }

    append(net, embed(stage.net, l, {l - 1, l}, l - 1, {l - 1}));
    carried = stage.out_range;

    std::vector<std::pair<std::vector<int>, Interval>> merged;
    for (const auto& [nu2, iv] : stage.cells) {
      std::vector<int> tail;
      tail.push_back(nu2[0]);
      const auto& old_tail = last[static_cast<std::size_t>(nu2[1] - 1)].first;
      tail.insert(tail.end(), old_tail.begin(), old_tail.end());
      merged.push_back({std::move(tail), iv});
    }
    std::sort(merged.begin(), merged.end(),
              [](const auto& a, const auto& b) { return a.second.lo < b.second.lo; });
    last = std::move(merged);
  }

  res.net = std::move(net);
  res.out_range = carried;
  for (auto& [tail, iv] : last) res.cells.push_back({tail, iv});
  return res;
}

PiecewiseResult build_piecewise_constant(Interval k, std::vector<Interval> intervals,
                                         std::vector<double> values, double eps,
                                         const StepFactory& steps) {
  if (intervals.empty() || intervals.size() != values.size()) {
    fail(ErrorKind::InvalidArgument, "build_piecewise_constant", "intervals/values mismatch");
  }
  if (!(eps > 0.0)) fail(ErrorKind::InvalidArgument, "build_piecewise_constant", "eps <= 0");
  {
    std::vector<std::size_t> order(intervals.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return intervals[a].lo < intervals[b].lo; });
    std::vector<Interval> iv2;
    std::vector<double> v2;
    for (std::size_t i : order) {
      iv2.push_back(intervals[i]);
      v2.push_back(values[i]);
    }
    intervals = std::move(iv2);
    values = std::move(v2);
  }
  const std::size_t n = intervals.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(intervals[i].lo >= k.lo && intervals[i].hi <= k.hi)) {
      fail(ErrorKind::InvalidArgument, "build_piecewise_constant", "interval outside K");
    }
    if (i > 0 && !(intervals[i].lo > intervals[i - 1].hi)) {
      fail(ErrorKind::InvalidArgument, "build_piecewise_constant", "intervals overlap");
    }
  }

  std::vector<double> snapped(values);
  const double snap = std::min(eps / 2.0, 0.5);
  for (double& c : snapped) c = std::clamp(c, snap, 1.0 - snap);
  const double eta = std::min(eps / 2.0, 0.25);

  std::vector<double> sep(n);
  double gap_clear = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    sep[i] = 0.5 * (intervals[i].hi + intervals[i + 1].lo);
    gap_clear = std::min({gap_clear, sep[i] - intervals[i].hi, intervals[i + 1].lo - sep[i]});
  }
  sep[n - 1] = k.hi;
  gap_clear = std::min(gap_clear, std::max(k.hi - intervals[n - 1].hi, 1e-9));
  if (n == 1) gap_clear = std::max(k.hi - intervals[0].hi, 1e-9);
  const double beta = 0.5 * std::min(gap_clear, eta);
  if (!(beta > 0.0)) {
    fail(ErrorKind::GapTooSmall, "build_piecewise_constant", "interval gaps too small");
  }

  const double span = k.length();
  const double a = 2.0 * std::max(1.0, 4.0 * span / eta);
  if (a > 1e8) {
    fail(ErrorKind::BudgetInfeasible, "build_piecewise_constant",
         "shift constant a = " + std::to_string(a) + " exceeds the 1e8 cap");
  }
  // Work in the u = (x - k.lo)/a frame: residuals stay below eta/8 and the
  // carried value stays O(1), which keeps later identity elimination sane.
  // The paper-frame construction is this one conjugated by x = a u + k.lo.
  const double u_top = span / a;
  const double margin_u = (beta + 1.0) / a;  // shifted points clear later deadzones
  const double min_c = *std::min_element(snapped.begin(), snapped.end());
  const double b_shift = u_top + margin_u - min_c;
  double sum_cb = 0.0;
  for (double c : snapped) sum_cb += c + b_shift;
  // Two constraints on the step error: the accumulated value drift stays
  // under eta/8, and the drift of the carried coordinate stays well inside
  // the beta clearance of every later separator (which lives at the 1/a
  // scale in the u frame).
  const double alpha = 0.5 * std::min(eta / (8.0 * std::max(sum_cb, 1.0)),
                                      beta / (2.0 * a * std::max(sum_cb, 1.0)));

  PiecewiseResult res;
  res.log["a"] = {a};
  res.log["b"] = {b_shift};
  res.log["x_sep"] = sep;
  res.log["alpha"] = {alpha};
  res.log["beta"] = {beta};
  res.log["eta"] = {eta};

  // Tracked sample values (u frame) for the clamp counts: interval samples,
  // near-separator probes, and a coarse sweep of K.
  std::vector<double> probes;
  {
    Rng rng(777);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& iv = intervals[i];
      probes.push_back(iv.lo);
      probes.push_back(iv.hi);
      for (int s = 0; s < 12; ++s) probes.push_back(uniform(rng, iv.lo, iv.hi));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (double t : {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0}) {
        const double x = sep[i] + t * beta;
        if (x >= k.lo && x <= k.hi) probes.push_back(x);
      }
    }
    for (int s = 0; s < 512; ++s) probes.push_back(uniform(rng, k.lo, k.hi));
  }
  std::vector<double> u(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) u[i] = (probes[i] - k.lo) / a;

  NarrowNet net = affine_net(affine_scalar(1.0 / a, -k.lo / a));
  double run_lo = 0.0, run_hi = u_top;
  for (std::size_t i = 0; i < n; ++i) {
    const double u_sep = (sep[i] - k.lo) / a;
    const double shift = snapped[i] + b_shift;
    StepApproximator rho;
    try {
      rho = steps(Interval{a * (u_sep - run_hi) - 1.0, a * (u_sep - run_lo) + 1.0}, alpha,
                  beta);
    } catch (const BuildError& e) {
      fail(ErrorKind::StepBuildFailed, "build_piecewise_constant", e.what());
    }
    AffineLayer pre;  // u -> (u, a*(u_sep - u))
    pre.W.resize(2, 1);
    pre.W << 1.0, -a;
    pre.b.resize(2);
    pre.b << 0.0, a * u_sep;
    AffineLayer post;  // (u, s) -> u + shift*s
    post.W.resize(1, 2);
    post.W << 1.0, shift;
    post.b = Eigen::VectorXd::Zero(1);
    NarrowNet stage = compose(compose(affine_net(pre), lift(rho.net, 2, {2})),
                              affine_net(post));
    append(net, stage);
    for (double& v : u) v += shift * forward_scalar(rho.net, a * u_sep - a * v);
    run_hi += shift;
  }

  append(net, affine_net(affine_scalar(1.0, -b_shift)));  // g_cut in the u frame
  for (double& v : u) v -= b_shift;

  const double pre_min = *std::min_element(u.begin(), u.end());
  const double pre_max = *std::max_element(u.begin(), u.end());
  // Sampled extremes, floored by analytic bounds: values never drop below
  // -b_shift, and even a double partial shift stays under u_top + 2 max(c+b).
  double max_cb = 0.0;
  for (double c : snapped) max_cb = std::max(max_cb, c + b_shift);
  const double analytic_max = u_top + 2.0 * max_cb - b_shift + eta;
  const double analytic_min = -b_shift - eta;
  const double clamp_max = std::max(pre_max, analytic_max);
  const double clamp_min = std::min(pre_min, analytic_min);
  const int n_up =
      clamp_max > 1.0 + 1e-12 ? static_cast<int>(std::ceil(2.0 * (clamp_max - 1.0))) + 1 : 0;
  const int n_down = clamp_min < -1e-12 ? static_cast<int>(std::ceil(-2.0 * clamp_min)) + 1 : 0;
  res.log["N1"] = {static_cast<double>(n_down)};
  res.log["N2"] = {static_cast<double>(n_up)};
  res.log["pre_clamp_min"] = {pre_min};
  res.log["pre_clamp_max"] = {pre_max};

  double s_lo = 1e-12, s_hi = 1e-12;
  if (n_up + n_down > 0) {
    const double eps_prime = eta / (8.0 * (n_up + n_down));
    const double delta_prime = std::min(1.5 * eps_prime, 0.25);
    const double guard = eta / 8.0;
    const double reach = std::max({clamp_max - clamp_min, 2.0});
    StepApproximator rho_c;
    try {
      rho_c = steps(Interval{guard - reach - 2.0, guard + reach + 2.0}, delta_prime, guard);
    } catch (const BuildError& e) {
      fail(ErrorKind::StepBuildFailed, "build_piecewise_constant", e.what());
    }
    AffineLayer pre;  // x -> (x, guard - x)
    pre.W.resize(2, 1);
    pre.W << 1.0, -1.0;
    pre.b.resize(2);
    pre.b << 0.0, guard;
    AffineLayer post;  // (x, s) -> x + (2/3) s
    post.W.resize(1, 2);
    post.W << 1.0, 2.0 / 3.0;
    post.b = Eigen::VectorXd::Zero(1);
    NarrowNet psi = compose(compose(affine_net(pre), lift(rho_c.net, 2, {2})),
                            affine_net(post));
    NarrowNet flip = affine_net(affine_scalar(-1.0, 1.0));
    NarrowNet psi_up = compose(compose(flip, psi), flip);  // 1 - psi(1 - x)

    auto psi_eval = [&](double x) {
      return x + (2.0 / 3.0) * forward_scalar(rho_c.net, guard - x);
    };
    for (int it = 0; it < n_up; ++it) {
      append(net, psi_up);
      for (double& v : u) v = 1.0 - psi_eval(1.0 - v);
    }
    for (int it = 0; it < n_down; ++it) {
      append(net, psi);
      for (double& v : u) v = psi_eval(v);
    }
    s_lo += 1e-9;
    s_hi += (n_up + n_down) * eps_prime;
    res.log["eps_prime"] = {eps_prime};
  }

  // Exact squeeze absorbing the clamp drift so the range is [0,1] strictly.
  const double denom = 1.0 + s_lo + s_hi;
  append(net, affine_net(affine_scalar(1.0 / denom, s_lo / denom)));

  res.net = std::move(net);

  // Contract checks: per-interval accuracy against the original values and
  // global range.
  Rng rng(778);
  double worst_dev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (int s = 0; s < 200; ++s) {
      const double x = uniform(rng, intervals[i].lo, intervals[i].hi);
      worst_dev = std::max(worst_dev, std::abs(forward_scalar(res.net, x) - values[i]));
    }
  }
  double range_lo = 0.0, range_hi = 1.0;
  for (int s = 0; s < 4000; ++s) {
    const double x = uniform(rng, k.lo, k.hi);
    const double v = forward_scalar(res.net, x);
    range_lo = std::min(range_lo, v);
    range_hi = std::max(range_hi, v);
  }
  res.log["max_dev"] = {worst_dev};
  if (worst_dev > eps || range_lo < 0.0 || range_hi > 1.0) {
    fail(ErrorKind::VerificationFailed, "build_piecewise_constant",
         "sampled deviation " + std::to_string(worst_dev) + " (eps " + std::to_string(eps) +
             ") or range [" + std::to_string(range_lo) + ", " + std::to_string(range_hi) +
             "] out of contract");
  }
  return res;
}

EncoderResult build_encoder(const CellPartition& partition,
                            const std::vector<std::pair<CellIndex, double>>& codes,
                            const StepFactory& steps, double ball_radius) {
  if (!(partition.gamma > 0.0 && partition.gamma < 0.5)) {
    fail(ErrorKind::InvalidArgument, "build_encoder", "gamma must be in (0, 0.5)");
  }
  if (ball_radius <= 0.0) ball_radius = partition.gamma;
  GridSpec grid;
  grid.axes.assign(static_cast<std::size_t>(partition.dx), {});
  for (int i = 0; i < partition.dx; ++i) {
    for (int j = 1; j <= partition.N; ++j) {
      grid.axes[static_cast<std::size_t>(i)].push_back(partition.axis_cell(j));
    }
  }
  FlattenResult flat = flatten_dgrid(grid, steps, unit_box(partition.dx));

  auto code_of = [&](const CellIndex& nu) {
    for (const auto& [idx, c] : codes) {
      if (idx == nu) return c;
    }
    fail(ErrorKind::InvalidArgument, "build_encoder", "missing code for a cell");
  };
  std::vector<Interval> intervals;
  std::vector<double> cvals;
  for (const auto& [nu, iv] : flat.cells) {
    intervals.push_back(iv);
    const double c = code_of(nu);
    if (!(c >= 0.0 && c <= 1.0)) {
      fail(ErrorKind::InvalidArgument, "build_encoder", "code point outside [0,1]");
    }
    cvals.push_back(c);
  }

  const double margin = 0.1 * std::max(1.0, flat.out_range.length());
  Interval k2{flat.out_range.lo - margin, flat.out_range.hi + margin};
  PiecewiseResult pw = build_piecewise_constant(k2, intervals, cvals, ball_radius, steps);

  EncoderResult res;
  res.net = compose(flat.net, pw.net);
  res.log = flat.log;
  for (const auto& [key, vals] : pw.log) res.log["pw_" + key] = vals;

  // Contract: every cell lands in the gamma-ball of its code point and the
  // whole domain maps into [0,1].
  Rng rng(901);
  double worst = 0.0;
  for (const auto& [nu, c] : codes) {
    const BoxDomain box = partition.cell_box(nu);
    for (int s = 0; s < 100; ++s) {
      const Eigen::VectorXd x = box.sample(rng);
      worst = std::max(worst, std::abs(forward(res.net, x)[0] - c));
    }
  }
  double lo = 0.0, hi = 1.0;
  const BoxDomain full = unit_box(partition.dx);
  for (int s = 0; s < 2000; ++s) {
    const double v = forward(res.net, full.sample(rng))[0];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  res.log["cell_worst_dev"] = {worst};
  if (worst > ball_radius + 1e-12 || lo < 0.0 || hi > 1.0) {
    fail(ErrorKind::VerificationFailed, "build_encoder",
         "cell deviation " + std::to_string(worst) + " exceeds gamma or range out of [0,1]");
  }
  return res;
}

}  // namespace minwidth
