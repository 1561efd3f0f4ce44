#include "minwidth/eliminate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace minwidth {

IdFactory make_id_factory(const ActPtr& act) {
  const DiffPoint dp = verify_cond_id(*act, act->default_z);
  return [act, dp](Interval range, double eps) {
    return build_identity_approx(act, dp, range, eps);
  };
}

namespace {

// Per-layer, per-coordinate pre-activation ranges under the sampled inputs.
std::vector<std::vector<Interval>> sample_ranges(const NarrowNet& net,
                                                 const std::vector<Eigen::VectorXd>& inputs) {
  std::vector<std::vector<Interval>> ranges(net.tags.size());
  for (std::size_t l = 0; l < net.tags.size(); ++l) {
    ranges[l].assign(net.tags[l].size(),
                     Interval{std::numeric_limits<double>::infinity(),
                              -std::numeric_limits<double>::infinity()});
  }
  Eigen::VectorXd cur, nxt;
  for (const auto& x : inputs) {
    cur = x;
    for (std::size_t l = 0; l < net.affines.size(); ++l) {
      nxt = net.affines[l].W * cur + net.affines[l].b;
      if (l < net.tags.size()) {
        auto& layer_ranges = ranges[l];
        for (int i = 0; i < nxt.size(); ++i) {
          auto& iv = layer_ranges[static_cast<std::size_t>(i)];
          iv.lo = std::min(iv.lo, nxt[i]);
          iv.hi = std::max(iv.hi, nxt[i]);
          if (net.tags[l][static_cast<std::size_t>(i)] == Tag::Sigma) {
            nxt[i] = net.activation->eval(nxt[i]);
          }
        }
      }
      cur.swap(nxt);
    }
  }
  return ranges;
}

Interval pad_range(Interval iv, double factor) {
  const double mid = iv.mid();
  const double half = std::max(0.5 * iv.length() * factor, 1e-6);
  return {mid - half, mid + half};
}

}  // namespace

NarrowNet eliminate_identity(const NarrowNet& net, const BoxDomain& k, double eps,
                             const IdFactory& id_factory, const EliminateOptions& opts,
                             EliminateReport* report) {
  if (!(eps > 0.0)) fail(ErrorKind::InvalidArgument, "eliminate_identity", "eps <= 0");
  const std::size_t id_count = net.id_tag_count();
  if (report) *report = EliminateReport{};
  if (id_count == 0) {
    if (report) report->max_deviation = 0.0;
    return net;
  }

  Rng rng(opts.seed);
  std::vector<Eigen::VectorXd> inputs;
  inputs.reserve(static_cast<std::size_t>(opts.range_samples) + opts.verify_points.size());
  for (int i = 0; i < opts.range_samples; ++i) inputs.push_back(k.sample(rng));
  for (const auto& v : opts.verify_points) inputs.push_back(v);

  const auto ranges = sample_ranges(net, inputs);

  std::size_t tagged_layers = 0;
  for (const auto& t : net.tags) {
    if (std::any_of(t.begin(), t.end(), [](Tag x) { return x == Tag::Id; })) ++tagged_layers;
  }

  const std::vector<Eigen::VectorXd>& check =
      opts.verify_points.empty() ? inputs : opts.verify_points;

  double delta = eps / (2.0 * static_cast<double>(std::max<std::size_t>(tagged_layers, 1)));
  std::map<std::tuple<double, double, double>, IdentityApproximator> cache;

  for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    NarrowNet g = net;
    ActPtr sandwich_act;
    try {
      for (std::size_t l = 0; l < g.tags.size(); ++l) {
        auto& t = g.tags[l];
        const int dim = static_cast<int>(t.size());
        Eigen::VectorXd pre_scale = Eigen::VectorXd::Ones(dim);
        Eigen::VectorXd pre_shift = Eigen::VectorXd::Zero(dim);
        Eigen::VectorXd post_scale = Eigen::VectorXd::Ones(dim);
        Eigen::VectorXd post_shift = Eigen::VectorXd::Zero(dim);
        bool any = false;
        for (int i = 0; i < dim; ++i) {
          if (t[static_cast<std::size_t>(i)] != Tag::Id) continue;
          any = true;
          Interval r = pad_range(ranges[l][static_cast<std::size_t>(i)], opts.range_pad);
          // Quantize outward so equal-ish ranges share one approximator.
          const double q = std::max(1e-6, 0.05 * std::max(std::abs(r.lo), std::abs(r.hi)));
          r.lo = std::floor(r.lo / q) * q;
          r.hi = std::ceil(r.hi / q) * q;
          auto key = std::make_tuple(r.lo, r.hi, delta);
          auto it = cache.find(key);
          if (it == cache.end()) {
            it = cache.emplace(key, id_factory(r, delta)).first;
          }
          const IdentityApproximator& ia = it->second;
          if (!sandwich_act) {
            sandwich_act = ia.net.activation;
            if (net.activation && !same_activation(net.activation, sandwich_act)) {
              fail(ErrorKind::ActivationMismatch, "eliminate_identity",
                   "identity factory uses a different activation than the net");
            }
          }
          pre_scale[i] = ia.lambda;
          pre_shift[i] = ia.z;
          const double d = ia.lambda * ia.dsigma_z;
          post_scale[i] = 1.0 / d;
          post_shift[i] = -ia.sigma_z / d;
          t[static_cast<std::size_t>(i)] = Tag::Sigma;
          if (report) ++report->replaced;
        }
        if (!any) continue;
        AffineLayer& before = g.affines[l];
        before.W = pre_scale.asDiagonal() * before.W;
        before.b = pre_scale.asDiagonal() * before.b + pre_shift;
        AffineLayer& after = g.affines[l + 1];
        after.b += after.W * post_shift;
        after.W = after.W * post_scale.asDiagonal();
      }
    } catch (const BuildError& e) {
      if (e.kind() == ErrorKind::LambdaUnderflow) {
        fail(ErrorKind::BudgetInfeasible, "eliminate_identity",
             "identity budget " + std::to_string(delta) + " not reachable: " + e.what());
      }
      throw;
    }
    if (!g.activation) g.activation = sandwich_act;

    double worst = 0.0;
    for (const auto& x : check) {
      worst = std::max(worst, (forward(net, x) - forward(g, x)).lpNorm<Eigen::Infinity>());
      if (worst > eps) break;
    }
    if (report) {
      report->delta = delta;
      report->max_deviation = worst;
      report->attempts = attempt;
      report->replaced = id_count;
    }
    if (worst <= eps) return g;
    delta /= 4.0;
    cache.clear();
  }
  fail(ErrorKind::VerificationFailed, "eliminate_identity",
       "sampled deviation stayed above eps after " + std::to_string(opts.max_attempts) +
           " budget reductions");
}

}  // namespace minwidth
