#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "minwidth/activation.hpp"
#include "minwidth/errors.hpp"
#include "minwidth/sampling.hpp"

namespace minwidth {

enum class Tag : std::uint8_t { Sigma, Id };

struct AffineLayer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;

  int in_dim() const { return static_cast<int>(W.cols()); }
  int out_dim() const { return static_cast<int>(W.rows()); }
};

AffineLayer affine_identity(int dim);
AffineLayer affine_scalar(double scale, double shift);
// second(first(x)): fuses two affine maps into one.
AffineLayer fuse(const AffineLayer& first, const AffineLayer& second);

// Layered narrow network: affines[0], tags[0], affines[1], ..., affines[L-1].
// Each tag vector assigns Sigma or Id to the neurons it follows. Nets are
// treated as immutable once built.
struct NarrowNet {
  std::vector<AffineLayer> affines;
  std::vector<std::vector<Tag>> tags;
  ActPtr activation;  // null for pure-affine nets

  int input_dim() const { return affines.front().in_dim(); }
  int output_dim() const { return affines.back().out_dim(); }
  int depth() const { return static_cast<int>(affines.size()); }

  // Maximum hidden dimension (0 when there are no hidden layers).
  int width() const {
    int w = 0;
    for (const auto& t : tags) w = std::max(w, static_cast<int>(t.size()));
    return w;
  }

  std::size_t id_tag_count() const {
    std::size_t n = 0;
    for (const auto& t : tags)
      for (Tag tag : t)
        if (tag == Tag::Id) ++n;
    return n;
  }

  std::size_t sigma_tag_count() const {
    std::size_t n = 0;
    for (const auto& t : tags)
      for (Tag tag : t)
        if (tag == Tag::Sigma) ++n;
    return n;
  }

  void check() const;  // dimension chain consistency, finite entries
};

struct BoxDomain {
  std::vector<Interval> dims;

  int dim() const { return static_cast<int>(dims.size()); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
    for (int i = 0; i < dim(); ++i) {
      if (x[i] < dims[static_cast<std::size_t>(i)].lo - tol ||
          x[i] > dims[static_cast<std::size_t>(i)].hi + tol)
        return false;
    }
    return true;
  }
  Eigen::VectorXd sample(Rng& rng) const {
    Eigen::VectorXd x(dim());
    for (int i = 0; i < dim(); ++i) {
      const auto& iv = dims[static_cast<std::size_t>(i)];
      x[i] = uniform(rng, iv.lo, iv.hi);
    }
    return x;
  }
};

inline BoxDomain unit_box(int d) {
  BoxDomain b;
  b.dims.assign(static_cast<std::size_t>(d), Interval{0.0, 1.0});
  return b;
}

// Reusable scratch buffers so repeated forward passes do not allocate.
struct ForwardScratch {
  std::vector<double> a;
  std::vector<double> b;
};

void forward_into(const NarrowNet& net, const double* x, int n, double* out, ForwardScratch& s);
Eigen::VectorXd forward(const NarrowNet& net, const Eigen::VectorXd& x);
double forward_scalar(const NarrowNet& net, double x);

NarrowNet affine_net(AffineLayer layer, ActPtr act = nullptr);
NarrowNet identity_net(int dim, ActPtr act = nullptr);

// second after first, fusing the seam affine pair.
NarrowNet compose(const NarrowNet& first, const NarrowNet& second);
// compose(base, next) without copying base.
void append(NarrowNet& base, const NarrowNet& next);

// Applies `sub` to the listed coordinates and threads all the others through
// depth-matched Id chains.
NarrowNet lift(const NarrowNet& sub, int total_dim, const std::vector<int>& coords);

// General placement: sub.input_dim() == |in_coords|, sub.output_dim() ==
// |out_coords|; remaining input coordinates pass through to the remaining
// output coordinates in order.
NarrowNet embed(const NarrowNet& sub, int total_in, const std::vector<int>& in_coords,
                int total_out, const std::vector<int>& out_coords);

std::string net_to_json(const NarrowNet& net);
NarrowNet net_from_json(const std::string& text);
void save_net(const NarrowNet& net, const std::string& path);
NarrowNet load_net(const std::string& path);

}  // namespace minwidth
