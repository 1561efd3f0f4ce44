#include "minwidth/approximator.hpp"

#include <algorithm>
#include <cmath>

namespace minwidth {

ModulusTable estimate_target_modulus(const TargetFunction& f, double p, int n_pairs,
                                     std::uint64_t seed) {
  BoxDomain box = unit_box(f.dx);
  return estimate_modulus_fn(f.eval, box, n_pairs, p, seed);
}

BuildParams select_parameters(double eps, double p, int dx, int dy,
                              const ModulusTable& omega_target,
                              const ModulusTable& omega_decoder) {
  if (!(eps > 0.0) || !(p >= 1.0) || dx < 1 || dy < 1) {
    fail(ErrorKind::InvalidArgument, "select_parameters", "bad inputs");
  }
  BuildParams bp;
  bp.eps = eps;
  bp.p = p;
  const double dy_root = std::pow(static_cast<double>(dy), 1.0 / p);
  const double three = std::pow(3.0, 1.0 + 1.0 / p);

  bp.delta = eps / (dy_root * three);

  const double gamma_cap_measure = std::pow(eps, p) / (3.0 * dx * dy);
  const double gamma_cap_decoder = omega_decoder.largest_radius_within(eps / three);
  bp.gamma = std::min({gamma_cap_measure, gamma_cap_decoder, 0.45});
  if (!(bp.gamma > 0.0)) {
    fail(ErrorKind::InfeasibleTolerance, "select_parameters",
         "no gamma satisfies the decoder modulus bound");
  }

  const double diam_bound = eps / (dy_root * three);
  const double side0 = 1.0 - 2.0 * bp.gamma;
  int n = 1;
  while (omega_target.eval(side0 / n) > diam_bound) {
    ++n;
    if (n > 100000) {
      fail(ErrorKind::InfeasibleTolerance, "select_parameters",
           "target modulus never small enough within the probe range");
    }
  }
  bp.N = n;

  // The four inequalities, re-checked exactly as stated.
  if (!(bp.delta <= eps / (dy_root * three) && bp.gamma <= gamma_cap_measure &&
        omega_decoder.eval(bp.gamma) <= eps / three &&
        omega_target.eval((1.0 - 2.0 * bp.gamma) / bp.N) <= diam_bound)) {
    fail(ErrorKind::InfeasibleTolerance, "select_parameters", "selected parameters invalid");
  }
  return bp;
}

ErrorReport measure_lp_error(const NarrowNet& net, const TargetFunction& target, double p,
                             long n, std::uint64_t seed,
                             const std::optional<CellPartition>& partition) {
  if (n < 10000) fail(ErrorKind::InvalidArgument, "measure_lp_error", "n must be >= 1e4");
  if (net.input_dim() != target.dx || net.output_dim() != target.dy) {
    fail(ErrorKind::DimensionMismatch, "measure_lp_error", "net/target dims disagree");
  }
  Rng rng(seed);
  const BoxDomain box = unit_box(target.dx);
  std::vector<CellIndex> cells;
  if (partition) cells = partition->all_cells();

  double sum = 0.0, sum_sq = 0.0;
  double sup_cells = 0.0;
  long off_cells = 0;
  Eigen::VectorXd x;
  for (long i = 0; i < n; ++i) {
    x = box.sample(rng);
    const double dist = norm_p(forward(net, x) - target.eval(x), p);
    const double y = std::pow(dist, p);
    sum += y;
    sum_sq += y * y;
    bool on_cell = false;
    if (partition) {
      // Cell membership is separable: check each axis index directly.
      on_cell = true;
      for (int d = 0; d < target.dx && on_cell; ++d) {
        const double scaled = x[d] * partition->N;
        const int nu = std::clamp(static_cast<int>(std::ceil(scaled)), 1, partition->N);
        on_cell = partition->axis_cell(nu).contains(x[d]);
      }
    }
    if (on_cell) {
      sup_cells = std::max(sup_cells, dist);
    } else {
      ++off_cells;
    }
  }
  ErrorReport rep;
  rep.samples = n;
  const double mean = sum / n;
  rep.lp_estimate = std::pow(mean, 1.0 / p);
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  const double hw_mean = 1.96 * std::sqrt(var / n);
  rep.ci_halfwidth =
      mean > 0.0 ? rep.lp_estimate * hw_mean / (p * mean) : 0.0;
  rep.sup_on_cells = sup_cells;
  rep.off_cell_mass = partition ? static_cast<double>(off_cells) / n : 0.0;
  return rep;
}

ApproxBuild build_approximator(const TargetFunction& target, const ActPtr& act, double eps,
                               double p, const ApproxOptions& opts) {
  if (!(eps > 0.0 && p >= 1.0)) {
    fail(ErrorKind::InvalidArgument, "build_approximator", "need eps > 0, p >= 1");
  }
  if (target.modulus.empty()) {
    fail(ErrorKind::InvalidArgument, "build_approximator", "target has no modulus table");
  }
  const double eps_pipe = eps * (1.0 - opts.elimination_share);
  const double eps_elim = eps * opts.elimination_share;
  const StepFactory steps{act, opts.step};

  // Decoder first: granularity from delta, backed off both when the nested
  // indicator construction stops being locatable in doubles and when the
  // resulting code points sit on cascade cliffs too steep for the encoder
  // ball. The Monte-Carlo measurement stays the gate either way.
  const double dy_root = std::pow(static_cast<double>(target.dy), 1.0 / p);
  const double three = std::pow(3.0, 1.0 + 1.0 / p);
  const double delta = eps_pipe / (dy_root * three);
  int curve_n = static_cast<int>(std::ceil(1.0 / delta - 1e-12));

  FillingCurve curve;
  ModulusTable omega_dec;
  BuildParams params;
  std::vector<CodePoint> code_points;
  std::vector<CellIndex> cells;
  double delta_pick = delta;
  double quality = 0.0;
  double best_quality = std::numeric_limits<double>::infinity();
  int best_n = -1;
  for (;;) {
    bool built = false;
    try {
      curve = build_filling_curve(curve_n, target.dy, steps);
      built = true;
    } catch (const BuildError& e) {
      if (e.kind() != ErrorKind::BandNotFound || curve_n <= 2) throw;
    }
    if (built) {
      delta_pick = std::max(delta, 1.0 / curve_n + 0.02);
      omega_dec = code_modulus_table(curve, p);
      params = select_parameters(eps_pipe, p, target.dx, target.dy, target.modulus,
                                 omega_dec);
      CellPartition probe{target.dx, params.N,
                          std::min(std::max(params.gamma,
                                            std::pow(eps_pipe, p) /
                                                (3.0 * target.dx * target.dy)),
                                   0.45)};
      cells = probe.all_cells();
      std::vector<Eigen::VectorXd> targets;
      targets.reserve(cells.size());
      for (const auto& nu : cells) {
        Eigen::VectorXd y = target.eval(probe.cell_center(nu));
        for (int i = 0; i < y.size(); ++i) y[i] = std::clamp(y[i], 0.0, 1.0);
        targets.push_back(std::move(y));
      }
      bool picked = false;
      try {
        code_points = pick_code_points(curve, targets, delta_pick, params.gamma);
        picked = true;
      } catch (const BuildError& e) {
        if (e.kind() != ErrorKind::CodePointInfeasible) throw;
      }
      if (picked) {
        quality = 0.0;
        for (const auto& cp : code_points) {
          quality = std::max(quality, cp.dist + cp.local_slope * params.gamma);
        }
        // Good enough when the code-point term leaves room for the remaining
        // budget terms; otherwise try a coarser, flatter curve.
        if (quality <= 0.6 * eps_pipe / dy_root) break;
        if (quality < best_quality) {
          best_quality = quality;
          best_n = curve_n;
        }
      }
    }
    if (curve_n <= 3) {
      if (best_n < 0) {
        fail(ErrorKind::CodePointInfeasible, "build_approximator",
             "no curve granularity produced feasible code points");
      }
      // No candidate met the bar; rebuild the best one seen.
      if (best_n != curve_n) {
        curve_n = best_n;
        curve = build_filling_curve(curve_n, target.dy, steps);
        delta_pick = std::max(delta, 1.0 / curve_n + 0.02);
        omega_dec = code_modulus_table(curve, p);
        params = select_parameters(eps_pipe, p, target.dx, target.dy, target.modulus,
                                   omega_dec);
        CellPartition probe{target.dx, params.N,
                            std::min(std::max(params.gamma,
                                              std::pow(eps_pipe, p) /
                                                  (3.0 * target.dx * target.dy)),
                                     0.45)};
        cells = probe.all_cells();
        std::vector<Eigen::VectorXd> targets;
        targets.reserve(cells.size());
        for (const auto& nu : cells) {
          Eigen::VectorXd y = target.eval(probe.cell_center(nu));
          for (int i = 0; i < y.size(); ++i) y[i] = std::clamp(y[i], 0.0, 1.0);
          targets.push_back(std::move(y));
        }
        code_points = pick_code_points(curve, targets, delta_pick, params.gamma);
      }
      break;
    }
    curve_n = std::max(2, static_cast<int>(curve_n * 0.6));
  }

  // The cell inset and the encoder ball radius both come from gamma in the
  // source construction; splitting them keeps the flatten gaps (inset-driven)
  // healthy when the decoder modulus forces a tiny ball radius. The inset
  // only enters the off-cell measure term and the ball radius only the
  // decoder-modulus term, so the budget chain still holds.
  const double gamma_inset =
      std::min(std::max(params.gamma, std::pow(eps_pipe, p) / (3.0 * target.dx * target.dy)),
               0.45);
  CellPartition partition{target.dx, params.N, gamma_inset};
  std::vector<std::pair<CellIndex, double>> codes;
  codes.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    codes.emplace_back(cells[i], code_points[i].c);
  }

  EncoderResult enc = build_encoder(partition, codes, steps, params.gamma);
  NarrowNet assembled = compose(enc.net, curve.net);

  const int want_width = std::max({target.dx, target.dy, 2});
  if (assembled.width() != want_width) {
    fail(ErrorKind::VerificationFailed, "build_approximator",
         "assembled width " + std::to_string(assembled.width()) + " != " +
             std::to_string(want_width));
  }

  // Identity elimination, verified on cell samples (the off-cell mass is
  // already budgeted separately).
  EliminateOptions eopts;
  eopts.seed = opts.seed ^ 0x9e3779b97f4a7c15ULL;
  Rng vr(opts.seed ^ 0xc2b2ae3d27d4eb4fULL);
  const std::size_t per_cell = std::max<std::size_t>(2, 4000 / cells.size());
  for (const auto& nu : cells) {
    const BoxDomain box = partition.cell_box(nu);
    for (std::size_t s = 0; s < per_cell; ++s) eopts.verify_points.push_back(box.sample(vr));
  }
  EliminateReport erep;
  NarrowNet pure = eliminate_identity(assembled, unit_box(target.dx), eps_elim,
                                      make_id_factory(act), eopts, &erep);
  if (pure.id_tag_count() != 0 || pure.width() != want_width) {
    fail(ErrorKind::VerificationFailed, "build_approximator",
         "elimination changed the advertised shape");
  }

  ApproxBuild out;
  out.net = std::move(pure);
  out.params = params;
  out.curve_N = curve_n;
  out.partition = partition;
  out.log = enc.log;
  out.log["delta"] = {params.delta};
  out.log["gamma"] = {params.gamma};
  out.log["gamma_inset"] = {gamma_inset};
  out.log["N"] = {static_cast<double>(params.N)};
  out.log["curve_N"] = {static_cast<double>(curve_n)};
  out.log["delta_pick"] = {delta_pick};
  out.log["code_quality"] = {quality};
  out.log["eps_pipe"] = {eps_pipe};
  out.log["eps_elim"] = {eps_elim};
  out.log["elim_delta"] = {erep.delta};
  out.log["elim_max_dev"] = {erep.max_deviation};
  out.log["elim_replaced"] = {static_cast<double>(erep.replaced)};
  return out;
}

}  // namespace minwidth
