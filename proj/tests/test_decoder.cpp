#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "minwidth/decoder.hpp"

using namespace minwidth;

TEST_CASE("indicator endpoint pattern, single z") {
  auto tanh_ = make_activation("tanh");
  const StepFactory steps{tanh_, {}};
  const NarrowNet f = build_indicator(steps, {0.5}, 0.1, 2);
  CHECK(f.width() == 2);
  auto at = [&](double x) { return forward(f, Eigen::VectorXd::Constant(1, x)); };
  CHECK(at(0.3)[0] == doctest::Approx(0.3).epsilon(1e-12));  // first output is x
  // Endpoints of the gamma-ball around 0.5: low side below 1/(2N), high side
  // above 1 - 1/(2N); the interval [1/4, 3/4] is then covered by continuity.
  CHECK(at(0.4)[1] <= 0.25);
  CHECK(at(0.6)[1] >= 0.75);
}

TEST_CASE("indicator alternation for two z points") {
  auto tanh_ = make_activation("tanh");
  const StepFactory steps{tanh_, {}};
  const NarrowNet f = build_indicator(steps, {0.25, 0.75}, 0.05, 2);
  auto second = [&](double x) { return forward(f, Eigen::VectorXd::Constant(1, x))[1]; };
  // Low / high / low across the three inter-z gaps.
  CHECK(second(0.1) <= 0.25);
  CHECK(second(0.5) >= 0.75);
  CHECK(second(0.9) <= 0.25);
  // Off the balls the second output sits within eps of {0, 1}.
  for (double x : {0.05, 0.12, 0.45, 0.55, 0.88}) {
    const double v = second(x);
    CHECK(std::min(v, 1.0 - v) <= 0.25);
  }
  // Range stays in the unit square.
  for (double x : jittered_grid({0.0, 1.0}, 2000, 12)) {
    const Eigen::VectorXd v = forward(f, Eigen::VectorXd::Constant(1, x));
    CHECK(v[0] >= -1e-9);
    CHECK(v[0] <= 1.0 + 1e-9);
    CHECK(v[1] >= -1e-9);
    CHECK(v[1] <= 1.0 + 1e-9);
  }
}

TEST_CASE("indicator rejects too-small gaps") {
  auto tanh_ = make_activation("tanh");
  const StepFactory steps{tanh_, {}};
  CHECK_THROWS_WITH_AS(build_indicator(steps, {0.5, 0.52}, 0.02, 2),
                       doctest::Contains("GapTooSmall"), BuildError);
}

TEST_CASE("filling curve base case is the identity") {
  auto tanh_ = make_activation("tanh");
  const StepFactory steps{tanh_, {}};
  const FillingCurve c = build_filling_curve(4, 1, steps);
  CHECK(c.tracked.size() == 4);
  for (double t : {0.0, 0.3, 1.0}) {
    CHECK(forward(c.net, Eigen::VectorXd::Constant(1, t))[0] == t);
  }
  // delta = 0 exactly; sampled coverage resolves to the sample spacing.
  const auto rep = verify_coverage(c, 5e-4, 20, 10000);
  CHECK(rep.pass);
}

TEST_CASE("extension to dimension 2") {
  auto sigmoid = make_activation("sigmoid");
  const StepFactory steps{sigmoid, {}};
  const FillingCurve c = build_filling_curve(2, 2, steps);
  CHECK(c.dim == 2);
  CHECK(c.net.width() == 2);
  CHECK(c.tracked.size() == 4);  // N^d bookkeeping

  const auto rep = verify_containment(c, 100);
  CHECK(rep.pass);

  // First coordinate stays the identity through the extension.
  for (double t : jittered_grid({0.0, 1.0}, 500, 77)) {
    CHECK(std::abs(forward(c.net, Eigen::VectorXd::Constant(1, t))[0] - t) <= 1e-6);
  }

  const auto cov = verify_coverage(c, 0.5 + 0.02, 20, 100000);
  CHECK(cov.pass);
}

TEST_CASE("three-dimensional curve bookkeeping") {
  auto sigmoid = make_activation("sigmoid");
  const StepFactory steps{sigmoid, {}};
  const FillingCurve c = build_filling_curve(2, 3, steps);
  CHECK(c.tracked.size() == 8);
  CHECK(c.net.width() == 3);
  const auto rep = verify_containment(c, 50);
  CHECK(rep.pass);
}

TEST_CASE("code points") {
  auto sigmoid = make_activation("sigmoid");
  const StepFactory steps{sigmoid, {}};
  const FillingCurve c = build_filling_curve(2, 2, steps);

  SUBCASE("cube centers accept the tracked midpoint") {
    std::vector<Eigen::VectorXd> targets;
    Eigen::VectorXd y(2);
    y << 0.25, 0.75;
    targets.push_back(y);
    const auto cps = pick_code_points(c, targets, 0.5);
    REQUIRE(cps.size() == 1);
    const Eigen::VectorXd img = forward(c.net, Eigen::VectorXd::Constant(1, cps[0].c));
    CHECK((img - y).lpNorm<Eigen::Infinity>() <= 0.5);
  }

  SUBCASE("boundary targets still fit with delta = 1/N") {
    std::vector<Eigen::VectorXd> targets;
    Eigen::VectorXd y(2);
    y << 0.5, 0.5;
    targets.push_back(y);
    const auto cps = pick_code_points(c, targets, 0.5);
    const Eigen::VectorXd img = forward(c.net, Eigen::VectorXd::Constant(1, cps[0].c));
    CHECK((img - y).lpNorm<Eigen::Infinity>() <= 0.5);
  }

  SUBCASE("pigeonhole: delta below half the cube side fails for some target") {
    std::vector<Eigen::VectorXd> targets;
    Eigen::VectorXd y(2);
    y << 0.0, 1.0;  // a corner; the curve cannot sit near every corner at once
    targets.push_back(y);
    bool failed = false;
    try {
      const auto cps = pick_code_points(c, targets, 0.05);
      const Eigen::VectorXd img = forward(c.net, Eigen::VectorXd::Constant(1, cps[0].c));
      failed = (img - y).lpNorm<Eigen::Infinity>() > 0.05;
    } catch (const BuildError& e) {
      failed = e.kind() == ErrorKind::CodePointInfeasible;
    }
    CHECK(failed);
  }
}

TEST_CASE("code modulus table is monotone and small at small radii") {
  auto sigmoid = make_activation("sigmoid");
  const StepFactory steps{sigmoid, {}};
  const FillingCurve c = build_filling_curve(2, 2, steps);
  const ModulusTable t = code_modulus_table(c, 2.0);
  for (std::size_t i = 1; i < t.omega.size(); ++i) CHECK(t.omega[i] >= t.omega[i - 1]);
  CHECK(t.largest_radius_within(0.9) > 0.0);
}
