#include "minwidth/net.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace minwidth {

using nlohmann::json;

AffineLayer affine_identity(int dim) {
  return AffineLayer{Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)};
}

AffineLayer affine_scalar(double scale, double shift) {
  AffineLayer l;
  l.W = Eigen::MatrixXd::Constant(1, 1, scale);
  l.b = Eigen::VectorXd::Constant(1, shift);
  return l;
}

AffineLayer fuse(const AffineLayer& first, const AffineLayer& second) {
  if (second.in_dim() != first.out_dim()) {
    fail(ErrorKind::DimensionMismatch, "fuse",
         "affine seam " + std::to_string(first.out_dim()) + " -> " +
             std::to_string(second.in_dim()));
  }
  AffineLayer out;
  out.W = second.W * first.W;
  out.b = second.W * first.b + second.b;
  return out;
}

void NarrowNet::check() const {
  if (affines.empty()) fail(ErrorKind::InvalidArgument, "NarrowNet", "no layers");
  if (tags.size() + 1 != affines.size()) {
    fail(ErrorKind::InvalidArgument, "NarrowNet", "tags/affines length mismatch");
  }
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (static_cast<int>(tags[i].size()) != affines[i].out_dim() ||
        static_cast<int>(tags[i].size()) != affines[i + 1].in_dim()) {
      fail(ErrorKind::DimensionMismatch, "NarrowNet",
           "dimension chain broken at layer " + std::to_string(i));
    }
  }
  for (const auto& l : affines) {
    if (!l.W.allFinite() || !l.b.allFinite()) {
      fail(ErrorKind::InvalidArgument, "NarrowNet", "non-finite affine entries");
    }
  }
  if (!activation && sigma_tag_count() > 0) {
    fail(ErrorKind::InvalidArgument, "NarrowNet", "sigma tags without an activation");
  }
}

void forward_into(const NarrowNet& net, const double* x, int n, double* out, ForwardScratch& s) {
  if (n != net.input_dim()) {
    fail(ErrorKind::DimensionMismatch, "forward",
         "input dim " + std::to_string(n) + " != " + std::to_string(net.input_dim()));
  }
  int maxw = n;
  for (const auto& l : net.affines) maxw = std::max(maxw, l.out_dim());
  if (s.a.size() < static_cast<std::size_t>(maxw)) {
    s.a.resize(static_cast<std::size_t>(maxw));
    s.b.resize(static_cast<std::size_t>(maxw));
  }
  double* cur = s.a.data();
  double* nxt = s.b.data();
  for (int i = 0; i < n; ++i) cur[i] = x[i];

  const ActivationSpec* act = net.activation.get();
  const std::size_t L = net.affines.size();
  for (std::size_t l = 0; l < L; ++l) {
    const AffineLayer& A = net.affines[l];
    const int rows = A.out_dim();
    const int cols = A.in_dim();
    const double* W = A.W.data();  // column-major
    for (int r = 0; r < rows; ++r) nxt[r] = A.b[r];
    for (int c = 0; c < cols; ++c) {
      const double xc = cur[c];
      const double* col = W + static_cast<std::ptrdiff_t>(c) * rows;
      for (int r = 0; r < rows; ++r) nxt[r] += col[r] * xc;
    }
    if (l < net.tags.size()) {
      const auto& t = net.tags[l];
      for (int r = 0; r < rows; ++r) {
        if (t[static_cast<std::size_t>(r)] == Tag::Sigma) nxt[r] = act->eval(nxt[r]);
      }
    }
    std::swap(cur, nxt);
  }
  const int od = net.output_dim();
  for (int i = 0; i < od; ++i) out[i] = cur[i];
}

Eigen::VectorXd forward(const NarrowNet& net, const Eigen::VectorXd& x) {
  thread_local ForwardScratch scratch;
  Eigen::VectorXd y(net.output_dim());
  forward_into(net, x.data(), static_cast<int>(x.size()), y.data(), scratch);
  return y;
}

double forward_scalar(const NarrowNet& net, double x) {
  thread_local ForwardScratch scratch;
  double y = 0.0;
  forward_into(net, &x, 1, &y, scratch);
  return y;
}

NarrowNet affine_net(AffineLayer layer, ActPtr act) {
  NarrowNet n;
  n.affines.push_back(std::move(layer));
  n.activation = std::move(act);
  return n;
}

NarrowNet identity_net(int dim, ActPtr act) {
  return affine_net(affine_identity(dim), std::move(act));
}

void append(NarrowNet& base, const NarrowNet& next) {
  if (base.output_dim() != next.input_dim()) {
    fail(ErrorKind::DimensionMismatch, "compose",
         "seam " + std::to_string(base.output_dim()) + " -> " +
             std::to_string(next.input_dim()));
  }
  if (base.activation && next.activation &&
      !same_activation(base.activation, next.activation)) {
    fail(ErrorKind::ActivationMismatch, "compose",
         base.activation->name + " vs " + next.activation->name);
  }
  if (!base.activation) base.activation = next.activation;
  base.affines.back() = fuse(base.affines.back(), next.affines.front());
  base.affines.insert(base.affines.end(), next.affines.begin() + 1, next.affines.end());
  base.tags.insert(base.tags.end(), next.tags.begin(), next.tags.end());
}

NarrowNet compose(const NarrowNet& first, const NarrowNet& second) {
  NarrowNet out = first;
  append(out, second);
  return out;
}

NarrowNet embed(const NarrowNet& sub, int total_in, const std::vector<int>& in_coords,
                int total_out, const std::vector<int>& out_coords) {
  if (static_cast<int>(in_coords.size()) != sub.input_dim() ||
      static_cast<int>(out_coords.size()) != sub.output_dim()) {
    fail(ErrorKind::DimensionMismatch, "embed", "coordinate lists must match sub dims");
  }
  const int pass = total_in - static_cast<int>(in_coords.size());
  if (pass < 0 || pass != total_out - static_cast<int>(out_coords.size())) {
    fail(ErrorKind::DimensionMismatch, "embed", "passthrough counts differ");
  }
  auto check_coords = [](const std::vector<int>& cs, int total) {
    std::vector<bool> seen(static_cast<std::size_t>(total), false);
    for (int c : cs) {
      if (c < 1 || c > total || seen[static_cast<std::size_t>(c - 1)]) {
        fail(ErrorKind::IndexOutOfRange, "embed", "bad coordinate " + std::to_string(c));
      }
      seen[static_cast<std::size_t>(c - 1)] = true;
    }
    std::vector<int> rest;
    for (int i = 1; i <= total; ++i)
      if (!seen[static_cast<std::size_t>(i - 1)]) rest.push_back(i);
    return rest;
  };
  const std::vector<int> in_rest = check_coords(in_coords, total_in);
  const std::vector<int> out_rest = check_coords(out_coords, total_out);

  // Hidden state layout: [sub's neurons..., passthrough...] at every level.
  NarrowNet out;
  out.activation = sub.activation;
  const std::size_t L = sub.affines.size();
  for (std::size_t l = 0; l < L; ++l) {
    const AffineLayer& A = sub.affines[l];
    const bool first = (l == 0);
    const bool last = (l + 1 == L);
    const int in_sub = A.in_dim();
    const int out_sub = A.out_dim();
    const int rows = out_sub + pass;
    const int cols = in_sub + pass;
    AffineLayer B;
    B.W = Eigen::MatrixXd::Zero(rows, cols);
    B.b = Eigen::VectorXd::Zero(rows);

    // Where sub's inputs/outputs and the passthrough sit in this layer.
    auto in_col = [&](int j) {  // sub input j (0-based)
      return first ? in_coords[static_cast<std::size_t>(j)] - 1 : j;
    };
    auto pass_col = [&](int j) {
      return first ? in_rest[static_cast<std::size_t>(j)] - 1 : in_sub + j;
    };
    auto out_row = [&](int i) {
      return last ? out_coords[static_cast<std::size_t>(i)] - 1 : i;
    };
    auto pass_row = [&](int j) {
      return last ? out_rest[static_cast<std::size_t>(j)] - 1 : out_sub + j;
    };

    for (int i = 0; i < out_sub; ++i) {
      B.b[out_row(i)] = A.b[i];
      for (int j = 0; j < in_sub; ++j) B.W(out_row(i), in_col(j)) = A.W(i, j);
    }
    for (int j = 0; j < pass; ++j) B.W(pass_row(j), pass_col(j)) = 1.0;

    out.affines.push_back(std::move(B));
    if (!last) {
      std::vector<Tag> t(sub.tags[l]);
      t.resize(static_cast<std::size_t>(out_sub + pass), Tag::Id);
      out.tags.push_back(std::move(t));
    }
  }
  // A single-affine sub embeds as a single affine; rows already routed.
  return out;
}

NarrowNet lift(const NarrowNet& sub, int total_dim, const std::vector<int>& coords) {
  return embed(sub, total_dim, coords, total_dim, coords);
}

namespace {

json activation_to_json(const ActPtr& act) {
  json j;
  if (!act) {
    j["name"] = "none";
    j["params"] = json::object();
    return j;
  }
  j["name"] = act->name;
  json p = json::object();
  for (const auto& [k, v] : act->params) p[k] = v;
  j["params"] = p;
  return j;
}

ActPtr activation_from_json(const json& j) {
  const std::string name = j.at("name").get<std::string>();
  if (name == "none") return nullptr;
  std::map<std::string, double> params;
  for (const auto& [k, v] : j.at("params").items()) params[k] = v.get<double>();
  if (name == "poly") {
    std::vector<double> coeffs;
    for (std::size_t i = 0;; ++i) {
      auto it = params.find("c" + std::to_string(i));
      if (it == params.end()) break;
      coeffs.push_back(it->second);
    }
    return make_poly(coeffs);
  }
  return make_activation(name, params);
}

}  // namespace

std::string net_to_json(const NarrowNet& net) {
  json j;
  j["input_dim"] = net.input_dim();
  j["output_dim"] = net.output_dim();
  j["activation"] = activation_to_json(net.activation);
  json layers = json::array();
  for (std::size_t l = 0; l < net.affines.size(); ++l) {
    const AffineLayer& A = net.affines[l];
    json layer;
    json rows = json::array();
    for (int r = 0; r < A.out_dim(); ++r) {
      json row = json::array();
      for (int c = 0; c < A.in_dim(); ++c) row.push_back(A.W(r, c));
      rows.push_back(std::move(row));
    }
    layer["weights"] = std::move(rows);
    json bias = json::array();
    for (int r = 0; r < A.out_dim(); ++r) bias.push_back(A.b[r]);
    layer["bias"] = std::move(bias);
    if (l < net.tags.size()) {
      json t = json::array();
      for (Tag tag : net.tags[l]) t.push_back(tag == Tag::Sigma ? "sigma" : "id");
      layer["tags"] = std::move(t);
    }
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  return j.dump();
}

NarrowNet net_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorKind::IoError, "net_from_json", e.what());
  }
  NarrowNet net;
  try {
    net.activation = activation_from_json(j.at("activation"));
    for (const auto& layer : j.at("layers")) {
      const auto& rows = layer.at("weights");
      const auto& bias = layer.at("bias");
      const int out_dim = static_cast<int>(rows.size());
      const int in_dim = out_dim > 0 ? static_cast<int>(rows[0].size()) : 0;
      AffineLayer A;
      A.W.resize(out_dim, in_dim);
      A.b.resize(out_dim);
      for (int r = 0; r < out_dim; ++r) {
        if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != in_dim) {
          fail(ErrorKind::IoError, "net_from_json", "ragged weight rows");
        }
        for (int c = 0; c < in_dim; ++c)
          A.W(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
        A.b[r] = bias.at(static_cast<std::size_t>(r)).get<double>();
      }
      net.affines.push_back(std::move(A));
      if (layer.contains("tags")) {
        std::vector<Tag> tv;
        for (const auto& t : layer.at("tags")) {
          const std::string s = t.get<std::string>();
          if (s == "sigma") {
            tv.push_back(Tag::Sigma);
          } else if (s == "id") {
            tv.push_back(Tag::Id);
          } else {
            fail(ErrorKind::IoError, "net_from_json", "bad tag: " + s);
          }
        }
        net.tags.push_back(std::move(tv));
      }
    }
    const int declared_in = j.at("input_dim").get<int>();
    const int declared_out = j.at("output_dim").get<int>();
    if (declared_in != net.input_dim() || declared_out != net.output_dim()) {
      fail(ErrorKind::IoError, "net_from_json", "declared dims disagree with layers");
    }
  } catch (const BuildError&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorKind::IoError, "net_from_json", e.what());
  }
  net.check();
  return net;
}

void save_net(const NarrowNet& net, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "save_net", "cannot open " + tmp);
    out << net_to_json(net);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    fail(ErrorKind::IoError, "save_net", "rename to " + path + " failed");
  }
}

NarrowNet load_net(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "load_net", "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return net_from_json(text);
}

}  // namespace minwidth
