#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <optional>
#include <variant>
#include <vector>

#include "minwidth/errors.hpp"
#include "minwidth/sampling.hpp"

namespace minwidth {

struct NarrowNet;

enum class ActKind {
  Exp,
  Sigmoid,
  Tanh,
  Sin,
  LeakyRelu,
  Relu,
  Elu,
  Selu,
  Gelu,
  Celu,
  Softplus,
  Swish,
  Mish,
  HardSwish,
  Poly,
};

// Which recipe certifies that width-1 compositions of the activation can
// squash toward a binary step.
struct MonotoneLimitCert {
  enum Side { Left, Right } side = Left;  // side where a finite limit exists
};
struct InflectionCert {
  double c = 0.0;      // second derivative flips + -> - at c
  double delta = 1.0;  // half-width of the twice-differentiable neighborhood
};
struct CriticalPointCert {
  double c = 0.0;  // sigma'(c) = 0
  Interval b_search{1e-2, 1e3};
};
struct KinkCert {
  double c = 0.0;  // breakpoint with one-sided derivative limits v_minus, v_plus
  double v_minus = 0.0;
  double v_plus = 0.0;
};
struct AnalyticConvexCert {
  Interval b_search{1.0, 1e3};
};
struct DirectWindowCert {
  std::shared_ptr<NarrowNet> net;
  double a = 0.0;
  double b = 1.0;
};

using CertificateKind = std::variant<MonotoneLimitCert, InflectionCert, CriticalPointCert,
                                     KinkCert, AnalyticConvexCert, DirectWindowCert>;

struct ActivationSpec {
  std::string name;
  ActKind kind = ActKind::Sigmoid;
  std::map<std::string, double> params;
  std::vector<double> coeffs;  // Poly only, ascending powers
  double p0 = 0.0;             // cached scalar params for the hot loop
  double p1 = 0.0;
  bool monotone = false;
  CertificateKind certificate{MonotoneLimitCert{}};
  // Window recipe used when a construction needs the fixed-point route even
  // though the closed-form monotone-limit step exists.
  std::optional<CertificateKind> window_fallback;
  double default_z = 0.0;  // point where Condition-1 style differentiability holds

  double operator()(double x) const { return eval(x); }

  double eval(double x) const {
    switch (kind) {
      case ActKind::Exp:
        return std::exp(x);
      case ActKind::Sigmoid:
        return 1.0 / (1.0 + std::exp(-x));
      case ActKind::Tanh:
        return std::tanh(x);
      case ActKind::Sin:
        return std::sin(x);
      case ActKind::LeakyRelu:
        return x > 0.0 ? x : p0 * x;
      case ActKind::Relu:
        return x > 0.0 ? x : 0.0;
      case ActKind::Elu:
        return x > 0.0 ? x : p0 * std::expm1(x);
      case ActKind::Selu:
        return p1 * (x > 0.0 ? x : p0 * std::expm1(x));
      case ActKind::Gelu:
        return x * 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
      case ActKind::Celu:
        return x > 0.0 ? x : p0 * std::expm1(x / p0);
      case ActKind::Softplus: {
        const double t = p0 * x;
        if (t > 36.0) return x + std::log1p(std::exp(-t)) / p0;
        return std::log1p(std::exp(t)) / p0;
      }
      case ActKind::Swish:
        return x / (1.0 + std::exp(-x));
      case ActKind::Mish: {
        const double sp = x > 36.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
        return x * std::tanh(sp);
      }
      case ActKind::HardSwish:
        if (x <= -3.0) return 0.0;
        if (x >= 3.0) return x;
        return x * (x + 3.0) / 6.0;
      case ActKind::Poly: {
        double acc = 0.0;
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
        return acc;
      }
    }
    return 0.0;
  }
};

using ActPtr = std::shared_ptr<const ActivationSpec>;

// Catalog lookup by name, e.g. make_activation("leaky_relu", {{"alpha", 0.3}}).
ActPtr make_activation(const std::string& name, const std::map<std::string, double>& params = {});
ActPtr make_poly(std::vector<double> coeffs);

bool same_activation(const ActPtr& a, const ActPtr& b);

struct DiffPoint {
  double z = 0.0;
  double derivative = 0.0;
};

// Central finite differences at shrinking step sizes; succeeds iff the three
// finest estimates agree within tol and the limit magnitude exceeds tol.
DiffPoint verify_cond_id(const ActivationSpec& act, double z, double h_min = 1e-7,
                         double tol = 1e-4);

}  // namespace minwidth
