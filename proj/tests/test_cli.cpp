#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

CmdResult run(const std::string& args) {
  const std::string cmd = std::string(MINWIDTH_CLI_PATH) + " " + args + " 2>&1";
  CmdResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) res.output += buf.data();
  const int status = pclose(pipe);
  res.exit_code = WEXITSTATUS(status);
  return res;
}

std::string tmpdir() {
  static const std::string dir = [] {
    std::string d = "/tmp/minwidth_cli_test";
    std::system(("mkdir -p " + d).c_str());
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("certify passes squashable activations") {
  const CmdResult tanh_res =
      run("certify --act tanh --k-lo -2 --k-hi 2 --eps 0.05 --zeta 0.1 --out-dir " + tmpdir());
  CHECK(tanh_res.exit_code == 0);

  const CmdResult leaky = run("certify --act leaky_relu --alpha 0.3 --out-dir " + tmpdir());
  CHECK(leaky.exit_code == 0);
}

TEST_CASE("certify rejects relu with exit code 2") {
  const CmdResult res = run("certify --act relu --out-dir " + tmpdir());
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("CertificateInvalid") != std::string::npos);
}

TEST_CASE("eval round trip and dimension errors") {
  const CmdResult built =
      run("build-id --act sigmoid --k-lo -1 --k-hi 1 --eps 0.001 --out-dir " + tmpdir());
  REQUIRE(built.exit_code == 0);
  const std::string net = tmpdir() + "/id_sigmoid.json";

  const CmdResult ok = run("eval --net " + net + " --input 0.25");
  CHECK(ok.exit_code == 0);
  CHECK(std::abs(std::stod(ok.output) - 0.25) <= 1e-3);

  const CmdResult bad_dim = run("eval --net " + net + " --input 0.25,0.5");
  CHECK(bad_dim.exit_code == 4);

  const CmdResult bad_file = run("eval --net /nonexistent.json --input 0.1");
  CHECK(bad_file.exit_code == 4);
}

TEST_CASE("exported step nets respect the step contract") {
  const CmdResult built =
      run("build-step --act tanh --k-lo -2 --k-hi 2 --eps 0.05 --zeta 0.1 --out-dir " +
          tmpdir());
  REQUIRE(built.exit_code == 0);
  const CmdResult at_one = run("eval --net " + tmpdir() + "/step_tanh.json --input 1.0");
  REQUIRE(at_one.exit_code == 0);
  const double v = std::stod(at_one.output);
  CHECK(v >= 0.95);
  CHECK(v <= 1.0);
}

TEST_CASE("build-approx writes a CSV row and is deterministic modulo runtime") {
  const std::string cfg_path = tmpdir() + "/cfg.json";
  {
    std::ofstream cfg(cfg_path);
    cfg << R"({"activation":{"name":"sigmoid"},"dx":1,"dy":1,"eps":0.25,"p":2,)"
        << R"("seed":7,"target":"smooth_sin","mc_samples":20000})";
  }
  const CmdResult a = run("build-approx --config " + cfg_path + " --out-dir " + tmpdir());
  REQUIRE(a.exit_code == 0);
  const CmdResult b = run("build-approx --config " + cfg_path + " --out-dir " + tmpdir());
  REQUIRE(b.exit_code == 0);

  auto strip_runtime = [](const std::string& s) {
    return s.substr(0, s.rfind(','));
  };
  CHECK(strip_runtime(a.output) == strip_runtime(b.output));
  CHECK(a.output.find("lp_error") != std::string::npos);
}

TEST_CASE("build-approx schema failures exit 4") {
  const std::string cfg_path = tmpdir() + "/bad_cfg.json";
  {
    std::ofstream cfg(cfg_path);
    cfg << R"({"activation":{"name":"sigmoid"},"dx":1})";
  }
  const CmdResult missing = run("build-approx --config " + cfg_path);
  CHECK(missing.exit_code == 4);

  const CmdResult unparsable = run("build-approx --config /nonexistent_cfg.json");
  CHECK(unparsable.exit_code == 4);
}

TEST_CASE("build-curve exports net and sidecar") {
  const CmdResult res =
      run("build-curve --act sigmoid --granularity 2 --dim 2 --out-dir " + tmpdir());
  REQUIRE(res.exit_code == 0);
  std::ifstream sidecar(tmpdir() + "/curve_sigmoid_N2_d2_tracked.csv");
  REQUIRE(sidecar.good());
  std::string header;
  std::getline(sidecar, header);
  CHECK(header == "nu,interval_lo,interval_hi");
  int rows = 0;
  std::string line;
  while (std::getline(sidecar, line)) ++rows;
  CHECK(rows == 4);
}
