#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "minwidth/encoder.hpp"

using namespace minwidth;

TEST_CASE("separator bullets") {
  // Geometry of the separating lemma: X0 and Y sit near first-coordinate 0
  // with b strictly between them, X1 near height 1; eta is the clearance.
  auto tanh_ = make_activation("tanh");
  const StepFactory steps{tanh_, {}};
  const double r = 3.0, xi = 0.01, b = 0.0, eta = 0.004;
  BoxDomain k;
  k.dims = {{-1.1, 1.1}, {-2.0, 2.0}};
  const NarrowNet f = build_separator(b, r, xi, eta, steps, k);
  CHECK(f.width() == 2);

  Rng rng(1);
  // X1-like inputs: first coordinate near 1: second coordinate moves by less
  // than 2 r xi and the first stays near 1.
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x(2);
    x << uniform(rng, 1.0 - xi, 1.0 + xi), uniform(rng, -1.0, 1.0);
    const Eigen::VectorXd y = forward(f, x);
    CHECK(std::abs(y[1] - x[1]) < 2.0 * r * xi);
    CHECK(y[0] >= 1.0 - xi);
  }
  // Y-like inputs: first coordinate in (b + eta, xi): shifted up by r and
  // parked at height ~1.
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x(2);
    x << uniform(rng, b + eta, xi), uniform(rng, -1.0, 1.0);
    const Eigen::VectorXd y = forward(f, x);
    CHECK(std::abs(y[1] - (x[1] + r)) < 2.0 * r * xi);
    CHECK(y[0] >= 1.0 - xi);
  }
  // X0-like inputs: first coordinate in (-xi, b - eta): near identity.
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x(2);
    x << uniform(rng, -xi, b - eta), uniform(rng, -1.0, 1.0);
    const Eigen::VectorXd y = forward(f, x);
    CHECK(std::abs(y[1] - x[1]) < 2.0 * r * xi);
    CHECK(y[0] <= xi);
  }
  // First-coordinate map is strictly increasing on X0's slab.
  double prev = -1.0;
  for (double x1 : jittered_grid({-xi, b - eta}, 200, 3)) {
    Eigen::VectorXd x(2);
    x << x1, 0.0;
    const double v = forward(f, x)[0];
    CHECK(v >= prev);
    prev = v;
  }

  // Conjugation sanity: with the step replaced by the identity the shear and
  // its inverse cancel exactly.
  AffineLayer shear, unshear;
  shear.W.resize(2, 2);
  shear.W << 1.0, 0.0, -r, 1.0;
  shear.b = Eigen::VectorXd::Zero(2);
  unshear.W.resize(2, 2);
  unshear.W << 1.0, 0.0, r, 1.0;
  unshear.b = Eigen::VectorXd::Zero(2);
  const AffineLayer both = fuse(shear, unshear);
  CHECK(both.W.isIdentity(0.0));
  CHECK(both.b.isZero(0.0));
}

namespace {

GridSpec unit_cells_grid(int n1, int n2) {
  GridSpec g;
  g.axes.resize(2);
  for (int i = 0; i < n1; ++i) g.axes[0].push_back({i + 0.1, i + 0.9});
  for (int j = 0; j < n2; ++j) g.axes[1].push_back({j + 0.1, j + 0.9});
  return g;
}

}  // namespace

TEST_CASE("flatten 2x2 grid into four disjoint intervals") {
  auto tanh_ = make_activation("tanh");
  const StepFactory steps{tanh_, {}};
  const GridSpec g = unit_cells_grid(2, 2);
  const FlattenResult res = flatten_2grid(g, steps);
  CHECK(res.cells.size() == 4);
  for (std::size_t i = 1; i < res.cells.size(); ++i) {
    CHECK(res.cells[i].second.lo > res.cells[i - 1].second.hi);
  }
  // Verify cell corners plus interior samples land inside the claimed interval.
  Rng rng(21);
  for (const auto& [nu, iv] : res.cells) {
    const Interval& u = g.axes[0][static_cast<std::size_t>(nu[0] - 1)];
    const Interval& v = g.axes[1][static_cast<std::size_t>(nu[1] - 1)];
    for (int s = 0; s < 100; ++s) {
      Eigen::VectorXd x(2);
      x << (s < 4 ? (s % 2 ? u.hi : u.lo) : uniform(rng, u.lo, u.hi)),
          (s < 4 ? (s / 2 ? v.hi : v.lo) : uniform(rng, v.lo, v.hi));
      const double y = forward(res.net, x)[0];
      CHECK(y >= iv.lo);
      CHECK(y <= iv.hi);
    }
  }
}

TEST_CASE("flatten single cell reduces to a projection") {
  auto tanh_ = make_activation("tanh");
  const StepFactory steps{tanh_, {}};
  GridSpec g;
  g.axes = {{Interval{0.2, 0.8}}, {Interval{0.3, 0.7}}};
  const FlattenResult res = flatten_2grid(g, steps);
  CHECK(res.cells.size() == 1);
  Eigen::VectorXd x(2);
  x << 0.4, 0.55;
  CHECK(forward(res.net, x)[0] == 0.55);
}

TEST_CASE("flatten 3x2 grid: block order per the separator shifts") {
  auto sigmoid = make_activation("sigmoid");
  const StepFactory steps{sigmoid, {}};
  const GridSpec g = unit_cells_grid(3, 2);
  const FlattenResult res = flatten_2grid(g, steps);
  CHECK(res.cells.size() == 6);
  // Lower first-axis blocks receive larger shifts, so block 1 lands above
  // block 2 above block 3; inside a block the second-axis order is kept.
  auto pos = [&](int i, int j) {
    for (std::size_t k = 0; k < res.cells.size(); ++k) {
      if (res.cells[k].first == CellIndex{i, j}) return static_cast<int>(k);
    }
    return -1;
  };
  CHECK(pos(3, 1) == 0);
  CHECK(pos(3, 2) == 1);
  CHECK(pos(2, 1) == 2);
  CHECK(pos(2, 2) == 3);
  CHECK(pos(1, 1) == 4);
  CHECK(pos(1, 2) == 5);
}

TEST_CASE("order preservation within a block") {
  auto sigmoid = make_activation("sigmoid");
  const StepFactory steps{sigmoid, {}};
  const GridSpec g = unit_cells_grid(3, 2);
  const FlattenResult res = flatten_2grid(g, steps);
  Rng rng(5);
  for (int i = 1; i <= 3; ++i) {
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::VectorXd x(2), y(2);
      const Interval& u = g.axes[0][static_cast<std::size_t>(i - 1)];
      x << uniform(rng, u.lo, u.hi), uniform(rng, 0.1, 0.9);
      y << uniform(rng, u.lo, u.hi), x[1] + uniform(rng, 0.05, 1.0);
      if (y[1] > 1.9) continue;
      if (y[1] > 0.9 && y[1] < 1.1) continue;  // between the two axis intervals
      const double fx = forward(res.net, x)[0];
      const double fy = forward(res.net, y)[0];
      CHECK(fy > fx);
    }
  }
}

TEST_CASE("flatten a 3-grid (2,2,2) into eight disjoint intervals") {
  auto sigmoid = make_activation("sigmoid");
  const StepFactory steps{sigmoid, {}};
  GridSpec g;
  g.axes.resize(3);
  for (int d = 0; d < 3; ++d) {
    for (int i = 0; i < 2; ++i) g.axes[static_cast<std::size_t>(d)].push_back({i + 0.1, i + 0.9});
  }
  const FlattenResult res = flatten_dgrid(g, steps);
  CHECK(res.net.input_dim() == 3);
  CHECK(res.net.output_dim() == 1);
  CHECK(res.net.width() == 3);
  CHECK(res.cells.size() == 8);
  for (std::size_t i = 1; i < res.cells.size(); ++i) {
    CHECK(res.cells[i].second.lo > res.cells[i - 1].second.hi);
  }
  // Distinct cells never share an interval; samples stay inside their own.
  Rng rng(31);
  for (const auto& [nu, iv] : res.cells) {
    for (int s = 0; s < 100; ++s) {
      Eigen::VectorXd x(3);
      for (int d = 0; d < 3; ++d) {
        const Interval& axis = g.axes[static_cast<std::size_t>(d)]
                                     [static_cast<std::size_t>(nu[static_cast<std::size_t>(d)] - 1)];
        x[d] = uniform(rng, axis.lo, axis.hi);
      }
      const double y = forward(res.net, x)[0];
      CHECK(y >= iv.lo);
      CHECK(y <= iv.hi);
    }
  }
}

TEST_CASE("1-grid flatten is the identity") {
  auto tanh_ = make_activation("tanh");
  const StepFactory steps{tanh_, {}};
  GridSpec g;
  g.axes = {{Interval{0.0, 0.2}, Interval{0.5, 0.6}}};
  const FlattenResult res = flatten_dgrid(g, steps);
  CHECK(res.cells.size() == 2);
  CHECK(forward(res.net, Eigen::VectorXd::Constant(1, 0.13))[0] == 0.13);
}

TEST_CASE("piecewise constant two-interval contract") {
  auto tanh_ = make_activation("tanh");
  const StepFactory steps{tanh_, {}};
  const PiecewiseResult pw = build_piecewise_constant(
      {0.0, 1.0}, {{0.1, 0.3}, {0.6, 0.9}}, {0.2, 0.8}, 0.05, steps);
  CHECK(pw.net.width() == 2);
  Rng rng(41);
  for (auto [iv, c] : {std::pair<Interval, double>{{0.1, 0.3}, 0.2},
                       std::pair<Interval, double>{{0.6, 0.9}, 0.8}}) {
    for (int s = 0; s < 1000; ++s) {
      const double x = uniform(rng, iv.lo, iv.hi);
      CHECK(std::abs(forward_scalar(pw.net, x) - c) <= 0.05);
    }
  }
  for (int s = 0; s < 10000; ++s) {
    const double v = forward_scalar(pw.net, uniform(rng, 0.0, 1.0));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("piecewise constant snaps boundary values") {
  auto tanh_ = make_activation("tanh");
  const StepFactory steps{tanh_, {}};
  const PiecewiseResult pw =
      build_piecewise_constant({0.0, 1.0}, {{0.2, 0.4}}, {0.0}, 0.05, steps);
  Rng rng(43);
  for (int s = 0; s < 1000; ++s) {
    const double x = uniform(rng, 0.2, 0.4);
    const double v = forward_scalar(pw.net, x);
    CHECK(std::abs(v) <= 0.05);
    CHECK(v >= 0.0);
  }
}

TEST_CASE("encoder for one dimension") {
  auto tanh_ = make_activation("tanh");
  const StepFactory steps{tanh_, {}};
  CellPartition part{1, 3, 0.1};
  std::vector<std::pair<CellIndex, double>> codes = {
      {{1}, 0.9}, {{2}, 0.15}, {{3}, 0.5}};
  const EncoderResult enc = build_encoder(part, codes, steps);
  CHECK(enc.net.width() == 2);
  Rng rng(51);
  for (const auto& [nu, c] : codes) {
    const Interval cell = part.axis_cell(nu[0]);
    for (int s = 0; s < 100; ++s) {
      const double x = uniform(rng, cell.lo, cell.hi);
      CHECK(std::abs(forward(enc.net, Eigen::VectorXd::Constant(1, x))[0] - c) <= 0.1);
    }
  }
}

TEST_CASE("encoder for two dimensions with a kink activation") {
  auto leaky = make_activation("leaky_relu", {{"alpha", 0.3}});
  const StepFactory steps{leaky, {}};
  CellPartition part{2, 2, 0.05};
  std::vector<std::pair<CellIndex, double>> codes;
  double c = 0.2;
  for (const auto& nu : part.all_cells()) {
    codes.emplace_back(nu, c);
    c += 0.2;
  }
  const EncoderResult enc = build_encoder(part, codes, steps);
  CHECK(enc.net.width() == 2);  // max{dx, 2}
  Rng rng(53);
  for (const auto& [nu, code] : codes) {
    const BoxDomain box = part.cell_box(nu);
    for (int s = 0; s < 100; ++s) {
      CHECK(std::abs(forward(enc.net, box.sample(rng))[0] - code) <= 0.05);
    }
  }
  // Two cells may share a code point.
  std::vector<std::pair<CellIndex, double>> shared = codes;
  shared[1].second = shared[0].second;
  const EncoderResult enc2 = build_encoder(part, shared, steps);
  CHECK(enc2.net.width() == 2);
}
