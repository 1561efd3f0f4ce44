#pragma once

#include <functional>

#include "minwidth/step.hpp"

namespace minwidth {

// Builds an identity approximator for a requested range and tolerance.
using IdFactory = std::function<IdentityApproximator(Interval range, double eps)>;

IdFactory make_id_factory(const ActPtr& act);

struct EliminateOptions {
  int range_samples = 512;      // inputs used to sample intermediate ranges
  double range_pad = 1.2;       // half-width inflation of sampled ranges
  int max_attempts = 6;         // per-layer budget retries (delta shrinks x4)
  std::uint64_t seed = 1234;
  // Extra inputs the error check runs on; defaults to samples of `box`.
  std::vector<Eigen::VectorXd> verify_points;
};

struct EliminateReport {
  double delta = 0.0;           // per-neuron identity budget that succeeded
  double max_deviation = 0.0;   // sampled sup |f - g| on the verification set
  int attempts = 0;
  std::size_t replaced = 0;
};

// Replaces every Id tag with an affine-sigma-affine sandwich; width, depth
// and dimensions are preserved and the sampled deviation on the verification
// set stays within eps.
NarrowNet eliminate_identity(const NarrowNet& net, const BoxDomain& k, double eps,
                             const IdFactory& id_factory, const EliminateOptions& opts = {},
                             EliminateReport* report = nullptr);

}  // namespace minwidth
