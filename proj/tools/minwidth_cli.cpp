// Command-line front end: certify activations, build step/identity nets,
// filling curves and end-to-end approximators, evaluate exported networks,
// and pretty-print reports.
//
// Exit codes: 0 pass, 2 certification failure, 3 build failure, 4 I/O or
// schema failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "minwidth/approximator.hpp"

using namespace minwidth;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCertify = 2;
constexpr int kExitBuild = 3;
constexpr int kExitIo = 4;

std::string output_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("MINWIDTH_OUT_DIR")) return env;
  return ".";
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "write_atomic", "cannot open " + tmp);
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    fail(ErrorKind::IoError, "write_atomic", "rename to " + path + " failed");
  }
}

// FNV-1a over the canonical config dump; artifacts carry this hash.
std::string config_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ActPtr activation_from_config(const std::string& name, double alpha, double lambda,
                              const std::vector<double>& coeffs) {
  if (name == "poly") {
    if (coeffs.empty()) fail(ErrorKind::InvalidArgument, "cli", "poly needs --coeffs");
    return make_poly(coeffs);
  }
  std::map<std::string, double> params;
  if (alpha > 0.0) params["alpha"] = alpha;
  if (lambda > 0.0) params["lambda"] = lambda;
  return make_activation(name, params);
}

json log_to_json(const BuildLog& log) {
  json j = json::object();
  for (const auto& [k, v] : log) {
    if (v.size() == 1) {
      j[k] = v[0];
    } else {
      j[k] = v;
    }
  }
  return j;
}

// Named target functions usable from configs; all map [0,1]^dx into [0,1]^dy.
TargetFunction named_target(const std::string& name, int dx, int dy) {
  TargetFunction t;
  t.name = name;
  t.dx = dx;
  t.dy = dy;
  if (name == "smooth_sin") {
    t.eval = [dx, dy](const Eigen::VectorXd& x) {
      Eigen::VectorXd y(dy);
      const double u = x[0];
      const double v = dx > 1 ? x[1] : 0.3;
      y[0] = 0.5 + (dy > 1 ? 0.04 : 0.05) * std::sin(u + v);
      if (dy > 1) y[1] = 0.1 + 0.04 * std::cos(u - v);
      for (int i = 2; i < dy; ++i) y[i] = 0.1 + 0.04 * std::sin(u + i);
      return y;
    };
  } else if (name == "identity") {
    t.eval = [dx, dy](const Eigen::VectorXd& x) {
      Eigen::VectorXd y = Eigen::VectorXd::Constant(dy, 0.5);
      for (int i = 0; i < std::min(dx, dy); ++i) y[i] = x[i];
      return y;
    };
  } else if (name == "mean") {
    t.eval = [dx, dy](const Eigen::VectorXd& x) {
      return Eigen::VectorXd::Constant(dy, x.mean());
    };
  } else if (name == "product") {
    t.eval = [dy](const Eigen::VectorXd& x) {
      return Eigen::VectorXd::Constant(dy, x.prod());
    };
  } else {
    fail(ErrorKind::InvalidArgument, "cli",
         "unknown target '" + name + "' (smooth_sin, identity, mean, product)");
  }
  return t;
}

int run_certify(const std::string& act_name, double alpha, double lambda,
                const std::vector<double>& coeffs, double k_lo, double k_hi, double eps,
                double zeta, int grid, const std::string& out_dir) {
  json report;
  report["activation"] = act_name;
  report["K"] = {k_lo, k_hi};
  report["eps"] = eps;
  report["zeta"] = zeta;
  int exit_code = kExitOk;
  try {
    ActPtr act = activation_from_config(act_name, alpha, lambda, coeffs);
    const DiffPoint dp = verify_cond_id(*act, act->default_z);
    report["cond1"] = {{"z", dp.z}, {"derivative", dp.derivative}};
    const StepApproximator sa = build_step_approx(act, {k_lo, k_hi}, eps, zeta);
    const StepVerifyReport rep = verify_step_approx(sa, grid);
    report["cond2"] = {{"pass", rep.pass},
                       {"max_err_off_deadzone", rep.max_err_off_deadzone},
                       {"min_successive_gap", rep.min_gap},
                       {"range", {rep.range_lo, rep.range_hi}},
                       {"interior_ties", rep.interior_ties},
                       {"inversions", rep.inversions},
                       {"iterations", sa.iterations},
                       {"grid_n", rep.grid_n}};
    if (!rep.pass) {
      report["error"] = "step verification failed";
      exit_code = kExitCertify;
    }
  } catch (const BuildError& e) {
    report["error"] = e.what();
    report["stage"] = e.stage();
    exit_code = kExitCertify;
  }
  report["pass"] = exit_code == kExitOk;
  write_atomic(output_dir(out_dir) + "/certify_" + act_name + ".json", report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return exit_code;
}

int run_build_approx(const json& cfg, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  json report;
  report["config_hash"] = config_hash(cfg);
  try {
    const std::string act_name = cfg.at("activation").at("name").get<std::string>();
    double alpha = 0.0, lambda = 0.0;
    if (cfg.at("activation").contains("params")) {
      const auto& p = cfg.at("activation").at("params");
      if (p.contains("alpha")) alpha = p.at("alpha").get<double>();
      if (p.contains("lambda")) lambda = p.at("lambda").get<double>();
    }
    const int dx = cfg.at("dx").get<int>();
    const int dy = cfg.at("dy").get<int>();
    const double eps = cfg.at("eps").get<double>();
    const double p = cfg.value("p", 2.0);
    const std::uint64_t seed = cfg.value("seed", 2025ULL);
    const long mc_samples = cfg.value("mc_samples", 100000L);
    const std::string target_name = cfg.value("target", std::string("smooth_sin"));

    ActPtr act = activation_from_config(act_name, alpha, lambda, {});
    TargetFunction target = named_target(target_name, dx, dy);
    target.modulus = estimate_target_modulus(target, p);

    ApproxOptions opts;
    opts.seed = seed;
    const ApproxBuild build = build_approximator(target, act, eps, p, opts);
    const ErrorReport err =
        measure_lp_error(build.net, target, p, mc_samples, seed, build.partition);

    const double runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string dir = output_dir(out_dir);
    const std::string stem = dir + "/approx_" + act_name + "_" + std::to_string(dx) + "x" +
                             std::to_string(dy);
    save_net(build.net, stem + ".json");

    report["net_file"] = stem + ".json";
    report["width"] = build.net.width();
    report["depth"] = build.net.depth();
    report["lp_error"] = err.lp_estimate;
    report["ci_halfwidth"] = err.ci_halfwidth;
    report["sup_on_cells"] = err.sup_on_cells;
    report["off_cell_mass"] = err.off_cell_mass;
    report["constants"] = log_to_json(build.log);
    write_atomic(stem + "_report.json", report.dump(2) + "\n");

    std::ostringstream row;
    row.precision(17);
    row << act_name << ',' << dx << ',' << dy << ',' << p << ',' << eps << ','
        << build.params.N << ',' << build.params.gamma << ',' << build.params.delta << ','
        << build.net.width() << ',' << build.net.depth() << ',' << err.lp_estimate << ','
        << err.ci_halfwidth << ',' << runtime_s << '\n';
    const std::string csv =
        "activation,dx,dy,p,eps,N,gamma,delta,width,depth,lp_error,ci,runtime_s\n" +
        row.str();
    write_atomic(stem + ".csv", csv);
    std::cout << csv;
    return kExitOk;
  } catch (const BuildError& e) {
    report["error"] = e.what();
    report["stage"] = e.stage();
    std::cerr << "build failed at stage " << e.stage() << ": " << e.what() << "\n";
    return kExitBuild;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constructive minimum-width universal approximators"};
  app.require_subcommand(1);

  std::string act_name = "tanh", out_dir;
  double alpha = 0.0, lambda = 0.0;
  std::vector<double> coeffs;
  double k_lo = -2.0, k_hi = 2.0, eps = 0.05, zeta = 0.1;
  int grid = 10000;

  auto add_act_flags = [&](CLI::App* cmd) {
    cmd->add_option("--act", act_name, "activation name (see catalog)");
    cmd->add_option("--alpha", alpha, "activation parameter alpha");
    cmd->add_option("--lambda", lambda, "activation parameter lambda");
    cmd->add_option("--coeffs", coeffs, "polynomial coefficients, ascending powers");
    cmd->add_option("--out-dir", out_dir, "output directory (default $MINWIDTH_OUT_DIR or .)");
  };

  auto* certify = app.add_subcommand("certify", "check squashability conditions");
  add_act_flags(certify);
  certify->add_option("--k-lo", k_lo, "domain lower end");
  certify->add_option("--k-hi", k_hi, "domain upper end");
  certify->add_option("--eps", eps, "step accuracy");
  certify->add_option("--zeta", zeta, "step deadzone half-width");
  certify->add_option("--grid", grid, "verification grid size");

  auto* build_step = app.add_subcommand("build-step", "build and export a step net");
  add_act_flags(build_step);
  build_step->add_option("--k-lo", k_lo, "domain lower end");
  build_step->add_option("--k-hi", k_hi, "domain upper end");
  build_step->add_option("--eps", eps, "step accuracy");
  build_step->add_option("--zeta", zeta, "step deadzone half-width");

  double id_eps = 1e-3;
  auto* build_id = app.add_subcommand("build-id", "build and export an identity net");
  add_act_flags(build_id);
  build_id->add_option("--k-lo", k_lo, "domain lower end");
  build_id->add_option("--k-hi", k_hi, "domain upper end");
  build_id->add_option("--eps", id_eps, "sup-error tolerance");

  int curve_n = 2, curve_d = 2;
  auto* build_curve = app.add_subcommand("build-curve", "build and export a filling curve");
  add_act_flags(build_curve);
  build_curve->add_option("--granularity", curve_n, "cubes per axis (N)");
  build_curve->add_option("--dim", curve_d, "target dimension d");

  std::string config_path;
  int cfg_dx = -1, cfg_dy = -1;
  double cfg_eps = -1.0, cfg_p = -1.0;
  long cfg_seed = -1;
  std::string cfg_target, cfg_act;
  auto* build_approx = app.add_subcommand("build-approx", "end-to-end approximator build");
  build_approx->add_option("--config", config_path, "JSON config file");
  build_approx->add_option("--dx", cfg_dx, "input dimension (overrides config)");
  build_approx->add_option("--dy", cfg_dy, "output dimension (overrides config)");
  build_approx->add_option("--eps", cfg_eps, "target Lp error (overrides config)");
  build_approx->add_option("--p", cfg_p, "Lp exponent (overrides config)");
  build_approx->add_option("--seed", cfg_seed, "Monte-Carlo seed (overrides config)");
  build_approx->add_option("--target", cfg_target, "named target (overrides config)");
  build_approx->add_option("--act", cfg_act, "activation name (overrides config)");
  build_approx->add_option("--out-dir", out_dir, "output directory");

  std::string net_path, input_csv;
  auto* eval = app.add_subcommand("eval", "evaluate an exported network");
  eval->add_option("--net", net_path, "network JSON file")->required();
  eval->add_option("--input", input_csv, "comma-separated input vector")->required();

  std::string report_path;
  auto* report_cmd = app.add_subcommand("report", "pretty-print a report file");
  report_cmd->add_option("--in", report_path, "report JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (certify->parsed()) {
      return run_certify(act_name, alpha, lambda, coeffs, k_lo, k_hi, eps, zeta, grid,
                         out_dir);
    }
    if (build_step->parsed()) {
      try {
        ActPtr act = activation_from_config(act_name, alpha, lambda, coeffs);
        const StepApproximator sa = build_step_approx(act, {k_lo, k_hi}, eps, zeta);
        const std::string path = output_dir(out_dir) + "/step_" + act_name + ".json";
        save_net(sa.net, path);
        std::cout << path << "\n";
        return kExitOk;
      } catch (const BuildError& e) {
        std::cerr << e.what() << "\n";
        return kExitBuild;
      }
    }
    if (build_id->parsed()) {
      try {
        ActPtr act = activation_from_config(act_name, alpha, lambda, coeffs);
        const DiffPoint dp = verify_cond_id(*act, act->default_z);
        const IdentityApproximator ia = build_identity_approx(act, dp, {k_lo, k_hi}, id_eps);
        const std::string path = output_dir(out_dir) + "/id_" + act_name + ".json";
        save_net(ia.net, path);
        std::cout << path << "\n";
        return kExitOk;
      } catch (const BuildError& e) {
        std::cerr << e.what() << "\n";
        return kExitBuild;
      }
    }
    if (build_curve->parsed()) {
      try {
        ActPtr act = activation_from_config(act_name, alpha, lambda, coeffs);
        const StepFactory steps{act, {}};
        const FillingCurve curve = build_filling_curve(curve_n, curve_d, steps);
        const std::string dir = output_dir(out_dir);
        const std::string stem = dir + "/curve_" + act_name + "_N" + std::to_string(curve_n) +
                                 "_d" + std::to_string(curve_d);
        save_net(curve.net, stem + ".json");
        save_tracked_csv(curve, stem + "_tracked.csv");
        std::cout << stem << ".json\n" << stem << "_tracked.csv\n";
        return kExitOk;
      } catch (const BuildError& e) {
        std::cerr << e.what() << "\n";
        return kExitBuild;
      }
    }
    if (build_approx->parsed()) {
      json cfg = json::object();
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
          std::cerr << "cannot open config " << config_path << "\n";
          return kExitIo;
        }
        try {
          in >> cfg;
        } catch (const std::exception& e) {
          std::cerr << "config parse error: " << e.what() << "\n";
          return kExitIo;
        }
      }
      // Flags override config fields.
      if (!cfg_act.empty()) cfg["activation"] = {{"name", cfg_act}};
      if (!cfg.contains("activation")) cfg["activation"] = {{"name", "sigmoid"}};
      if (cfg_dx > 0) cfg["dx"] = cfg_dx;
      if (cfg_dy > 0) cfg["dy"] = cfg_dy;
      if (cfg_eps > 0) cfg["eps"] = cfg_eps;
      if (cfg_p > 0) cfg["p"] = cfg_p;
      if (cfg_seed >= 0) cfg["seed"] = cfg_seed;
      if (!cfg_target.empty()) cfg["target"] = cfg_target;
      // Schema validation before any build starts.
      for (const char* key : {"dx", "dy", "eps"}) {
        if (!cfg.contains(key)) {
          std::cerr << "config missing required field '" << key << "'\n";
          return kExitIo;
        }
      }
      if (!cfg.at("dx").is_number_integer() || !cfg.at("dy").is_number_integer() ||
          !cfg.at("eps").is_number() || cfg.at("dx").get<int>() < 1 ||
          cfg.at("dy").get<int>() < 1 || cfg.at("eps").get<double>() <= 0.0) {
        std::cerr << "config schema invalid: dx, dy must be positive integers, eps > 0\n";
        return kExitIo;
      }
      return run_build_approx(cfg, out_dir);
    }
    if (eval->parsed()) {
      NarrowNet net;
      try {
        net = load_net(net_path);
      } catch (const BuildError& e) {
        std::cerr << e.what() << "\n";
        return kExitIo;
      }
      std::vector<double> xs;
      std::stringstream ss(input_csv);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        try {
          xs.push_back(std::stod(tok));
        } catch (const std::exception&) {
          std::cerr << "bad input component: " << tok << "\n";
          return kExitIo;
        }
      }
      if (static_cast<int>(xs.size()) != net.input_dim()) {
        std::cerr << "input dim " << xs.size() << " != network dim " << net.input_dim()
                  << "\n";
        return kExitIo;
      }
      Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(xs.data(), xs.size());
      const Eigen::VectorXd y = forward(net, x);
      std::cout.precision(17);
      for (int i = 0; i < y.size(); ++i) std::cout << (i ? " " : "") << y[i];
      std::cout << "\n";
      return kExitOk;
    }
    if (report_cmd->parsed()) {
      std::ifstream in(report_path);
      if (!in) {
        std::cerr << "cannot open " << report_path << "\n";
        return kExitIo;
      }
      json j;
      try {
        in >> j;
      } catch (const std::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitIo;
      }
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const BuildError& e) {
    std::cerr << e.what() << "\n";
    return kExitBuild;
  }
  return kExitOk;
}
