#include "minwidth/activation.hpp"

#include <cmath>
#include <limits>

namespace minwidth {

namespace {

double num_derivative(const ActivationSpec& act, double x, double h = 1e-6) {
  return (act.eval(x + h) - act.eval(x - h)) / (2.0 * h);
}

// Locates a sign change of the numerical derivative in [lo, hi] by bisection.
double derivative_root(const ActivationSpec& act, double lo, double hi) {
  double dlo = num_derivative(act, lo);
  double dhi = num_derivative(act, hi);
  if (dlo * dhi > 0.0) fail(ErrorKind::InvalidArgument, "derivative_root", "no sign change");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double dm = num_derivative(act, mid);
    if (dlo * dm <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
      dlo = dm;
    }
  }
  return 0.5 * (lo + hi);
}

bool sampled_nondecreasing(const ActivationSpec& act, Interval k, int n = 2048) {
  double prev = act.eval(k.lo);
  for (int i = 1; i < n; ++i) {
    const double x = k.lo + k.length() * i / (n - 1);
    const double v = act.eval(x);
    if (v < prev) return false;
    prev = v;
  }
  return true;
}

double get(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

ActPtr make_activation(const std::string& name, const std::map<std::string, double>& params) {
  auto spec = std::make_shared<ActivationSpec>();
  spec->name = name;
  spec->params = params;
  if (name == "exp") {
    spec->kind = ActKind::Exp;
    spec->monotone = true;
    spec->certificate = MonotoneLimitCert{MonotoneLimitCert::Left};
    spec->window_fallback = AnalyticConvexCert{{0.25, 1e3}};
    spec->default_z = 0.0;
  } else if (name == "sigmoid") {
    spec->kind = ActKind::Sigmoid;
    spec->monotone = true;
    spec->certificate = MonotoneLimitCert{MonotoneLimitCert::Left};
    spec->window_fallback = InflectionCert{0.0, 4.0};
    spec->default_z = 0.0;
  } else if (name == "tanh") {
    spec->kind = ActKind::Tanh;
    spec->monotone = true;
    spec->certificate = MonotoneLimitCert{MonotoneLimitCert::Left};
    spec->window_fallback = InflectionCert{0.0, 4.0};
    spec->default_z = 0.0;
  } else if (name == "sin") {
    spec->kind = ActKind::Sin;
    spec->certificate = InflectionCert{0.0, 3.14159265358979323846};
    spec->default_z = 0.0;
  } else if (name == "leaky_relu") {
    spec->kind = ActKind::LeakyRelu;
    spec->p0 = get(params, "alpha", 0.01);
    spec->params["alpha"] = spec->p0;
    spec->monotone = spec->p0 > 0.0;
    spec->certificate = KinkCert{0.0, spec->p0, 1.0};
    spec->default_z = 1.0;
  } else if (name == "relu") {
    spec->kind = ActKind::Relu;
    spec->monotone = true;
    spec->certificate = KinkCert{0.0, 0.0, 1.0};
    spec->default_z = 1.0;
  } else if (name == "elu") {
    spec->kind = ActKind::Elu;
    spec->p0 = get(params, "alpha", 1.0);
    spec->params["alpha"] = spec->p0;
    spec->monotone = true;
    spec->certificate = MonotoneLimitCert{MonotoneLimitCert::Left};
    spec->window_fallback = AnalyticConvexCert{{0.25, 1e3}};
    spec->default_z = 1.0;
  } else if (name == "selu") {
    spec->kind = ActKind::Selu;
    spec->p0 = get(params, "alpha", 1.6732632423543772);
    spec->p1 = get(params, "lambda", 1.0507009873554805);
    spec->params["alpha"] = spec->p0;
    spec->params["lambda"] = spec->p1;
    spec->monotone = true;
    spec->certificate = MonotoneLimitCert{MonotoneLimitCert::Left};
    spec->window_fallback = AnalyticConvexCert{{0.25, 1e3}};
    spec->default_z = 1.0;
  } else if (name == "gelu") {
    spec->kind = ActKind::Gelu;
    spec->certificate = CriticalPointCert{derivative_root(*spec, -1.5, -0.2), {1e-2, 50.0}};
    spec->default_z = 1.0;
  } else if (name == "celu") {
    spec->kind = ActKind::Celu;
    spec->p0 = get(params, "alpha", 1.0);
    spec->params["alpha"] = spec->p0;
    spec->monotone = true;
    spec->certificate = MonotoneLimitCert{MonotoneLimitCert::Left};
    spec->window_fallback = AnalyticConvexCert{{0.25, 1e3}};
    spec->default_z = 1.0;
  } else if (name == "softplus") {
    spec->kind = ActKind::Softplus;
    spec->p0 = get(params, "alpha", 1.0);
    spec->params["alpha"] = spec->p0;
    spec->monotone = true;
    spec->certificate = MonotoneLimitCert{MonotoneLimitCert::Left};
    spec->window_fallback = AnalyticConvexCert{{0.25, 1e3}};
    spec->default_z = 0.0;
  } else if (name == "swish") {
    spec->kind = ActKind::Swish;
    spec->certificate = CriticalPointCert{derivative_root(*spec, -2.5, -1.0), {1e-2, 50.0}};
    spec->default_z = 1.0;
  } else if (name == "mish") {
    spec->kind = ActKind::Mish;
    spec->certificate = CriticalPointCert{derivative_root(*spec, -2.0, -0.5), {1e-2, 50.0}};
    spec->default_z = 1.0;
  } else if (name == "hardswish") {
    spec->kind = ActKind::HardSwish;
    spec->certificate = KinkCert{3.0, 1.5, 1.0};
    spec->default_z = 1.0;
  } else {
    fail(ErrorKind::InvalidArgument, "make_activation", "unknown activation: " + name);
  }
  return spec;
}

ActPtr make_poly(std::vector<double> coeffs) {
  while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
  if (coeffs.size() < 3) {
    fail(ErrorKind::InvalidArgument, "make_poly", "polynomial must be non-affine (degree >= 2)");
  }
  auto spec = std::make_shared<ActivationSpec>();
  spec->kind = ActKind::Poly;
  spec->coeffs = coeffs;
  spec->name = "poly";
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    spec->params["c" + std::to_string(i)] = coeffs[i];
  }
  spec->monotone = sampled_nondecreasing(*spec, {-10.0, 10.0});

  // Critical point of the derivative polynomial, if one exists in a probe range.
  bool has_root = false;
  double root = 0.0;
  const int n = 4096;
  double prev = num_derivative(*spec, -10.0);
  for (int i = 1; i <= n && !has_root; ++i) {
    const double x = -10.0 + 20.0 * i / n;
    const double d = num_derivative(*spec, x);
    if (prev == 0.0 || prev * d < 0.0) {
      root = derivative_root(*spec, x - 20.0 / n, x);
      has_root = true;
    }
    prev = d;
  }
  if (has_root) {
    spec->certificate = CriticalPointCert{root, {1e-2, 1e3}};
  } else {
    spec->certificate = AnalyticConvexCert{{1.0, 1e3}};
  }

  // Condition-1 probe point: any z with a stable nonzero derivative.
  for (double z : {1.0, -1.0, 0.5, -0.5, 2.0, -2.0, 0.0}) {
    if (std::abs(num_derivative(*spec, z)) > 1e-3) {
      spec->default_z = z;
      break;
    }
  }
  return spec;
}

bool same_activation(const ActPtr& a, const ActPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return a->name == b->name && a->params == b->params && a->coeffs == b->coeffs;
}

DiffPoint verify_cond_id(const ActivationSpec& act, double z, double h_min, double tol) {
  if (!(std::isfinite(z))) fail(ErrorKind::InvalidArgument, "verify_cond_id", "z not finite");
  if (!(h_min > 0.0 && h_min < 1.0)) {
    fail(ErrorKind::InvalidArgument, "verify_cond_id", "need 0 < h_min < 1");
  }
  if (!(tol > 0.0)) fail(ErrorKind::InvalidArgument, "verify_cond_id", "tol must be > 0");

  auto central = [&](double h) { return (act.eval(z + h) - act.eval(z - h)) / (2.0 * h); };

  for (double h = 1e-3; h >= h_min; h *= 0.5) {
    const double d1 = central(h);
    const double d2 = central(h / 2.0);
    const double d3 = central(h / 4.0);
    const double spread =
        std::max({std::abs(d1 - d2), std::abs(d2 - d3), std::abs(d1 - d3)});
    if (spread <= tol) {
      if (std::abs(d3) <= tol) {
        fail(ErrorKind::ZeroDerivative, "verify_cond_id",
             "derivative magnitude " + std::to_string(std::abs(d3)) + " below tol");
      }
      return DiffPoint{z, d3};
    }
  }
  fail(ErrorKind::NonDifferentiable, "verify_cond_id",
       "finite-difference estimates never agreed within tol");
}

}  // namespace minwidth
