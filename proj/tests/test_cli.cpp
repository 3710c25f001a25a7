// Tests for the command-line front end: config parsing (rationals, invariant
// validation, error naming), deterministic report emission, and the exit-code
// contract of the installed binary (0 success, 2 engine failure, 3 config
// error).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "zerohopf/cli.hpp"

using namespace zerohopf;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  auto p = fs::temp_directory_path() / "zerohopf_cli_test";
  fs::create_directories(p);
  return p;
}

fs::path write_config(const std::string& name, const std::string& body) {
  auto p = scratch_dir() / name;
  std::ofstream out(p);
  out << body;
  return p;
}

const std::string base_b_config =
    "case = B\n"
    "omega = 39/32\n"
    "alpha1 = 497/1024\nalpha2 = -1521/1024\nalpha3 = 55\n"
    "alpha4 = 37/40\nalpha5 = 57/5\n"
    "beta1 = -1\nbeta2 = -1\nbeta3 = -177/10\nbeta4 = -1\nbeta5 = 18\n"
    "gamma1 = 1\ngamma2 = -1\ngamma3 = 0\ngamma4 = 193/10\ngamma5 = -247/10\n"
    "eps = 1/50\n";

int run_binary(const std::string& args) {
  std::string cmd = std::string(ZH_CLI_BINARY) + " " + args;
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("rational and decimal number parsing") {
  CHECK(cli::parse_number("39/32") == 39.0 / 32.0);
  CHECK(cli::parse_number("-177/10") == -17.7);
  CHECK(cli::parse_number(" 0.0012 ") == 0.0012);
  CHECK(cli::parse_number("1e-3") == 1e-3);
  CHECK(cli::parse_number("4907/11449") == 4907.0 / 11449.0);
  CHECK_THROWS_AS(cli::parse_number("abc"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_number("1/0"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_number("1//2"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_number(""), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_number("1.5x"), cli::ConfigError);
}

TEST_CASE("seventeen-significant-digit formatting") {
  CHECK(cli::format17(3.141592653589793) == "3.1415926535897931");
  CHECK(cli::format17(1.0) == "1");
  CHECK(cli::format17(-0.0012) == "-0.0011999999999999999");
}

TEST_CASE("config parsing") {
  auto p = write_config("good.cfg",
                        base_b_config +
                            "analyses = averaging, findings\n"
                            "averaging_points = 3\n"
                            "eps_ladder = 1/50, 1/100\n"
                            "out = somewhere\n");
  auto cfg = cli::parse_config(p.string());
  CHECK(cfg.case_tag == "B");
  CHECK(cfg.case_b.omega == 39.0 / 32.0);
  CHECK(cfg.case_b.beta[2] == -17.7);
  CHECK(cfg.case_b.eps == 0.02);
  CHECK(cfg.analyses == std::vector<std::string>{"averaging", "findings"});
  CHECK(cfg.averaging_points == 3);
  CHECK(cfg.eps_ladder == std::vector<double>{0.02, 0.01});
  CHECK(cfg.out_dir == "somewhere");
}

TEST_CASE("config validation names the violated invariant") {
  auto throws_with = [](const std::string& name, const std::string& body,
                        const std::string& needle) {
    auto p = write_config(name, body);
    try {
      cli::parse_config(p.string());
      FAIL("expected ConfigError for ", name);
    } catch (const cli::ConfigError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  throws_with("no_analyses.cfg", base_b_config, "no analyses requested");
  throws_with("neg_tol.cfg",
              base_b_config + "analyses = averaging\node_rel_tol = -1\n",
              "must be positive");
  throws_with("unknown_key.cfg",
              base_b_config + "analyses = averaging\nbogus = 1\n",
              "unknown key");
  throws_with("unknown_analysis.cfg", base_b_config + "analyses = dance\n",
              "unknown analysis");
  throws_with("bad_eps.cfg",
              "case = B\nomega = 39/32\ngamma1 = 1\neps = 0.7\n"
              "analyses = orbit\n",
              "(0, 0.5)");
  throws_with("dup.cfg", base_b_config + "analyses = averaging\neps = 1/50\n",
              "duplicate key");
  throws_with("torus_case.cfg",
              base_b_config + "analyses = torus\nscan_lo = 1\nscan_hi = 2\n",
              "torus analysis requires case A");
  throws_with("no_window.cfg",
              "case = A\nabar = -1\nalpha = 41\nbeta = -38\n"
              "gamma = 3\neps = 1/100\nanalyses = torus\n",
              "scan_lo < scan_hi");
  throws_with("bad_level.cfg",
              "case = standard\nomega = 2\nalpha2 = 1\neps = 1/100\n"
              "level = 7\nanalyses = findings\n",
              "level must be between 1 and 4");
  throws_with("bad_pattern.cfg",
              "case = standard\nomega = 2\ngamma1 = 1\neps = 1/100\n"
              "level = 1\nanalyses = findings\n",
              "alpha_i = gamma_i = 0");
  CHECK_THROWS_AS(cli::parse_config("/nonexistent/path.cfg"),
                  cli::ConfigError);
}

TEST_CASE("selftest entry point") {
  CHECK(cli::run_selftest() == 0);
  CHECK(cli::run_selftest(1e-10, /*force_mismatch=*/true) == 2);
}

TEST_CASE("standard-case findings analysis") {
  cli::RunConfig cfg;
  cfg.case_tag = "standard";
  cfg.case_b.omega = 1.45;
  cfg.case_b.alpha = {0.0, 0.9, 0.0, 0.0, 0.0};
  cfg.case_b.beta = {0.6, -1.2, 0.8, 0.3, -0.5};
  cfg.case_b.gamma = {0.0, -1.4, 0.0, 0.0, 0.0};
  cfg.standard_level = 1;
  cfg.analyses = {"findings"};
  cfg.findings_points = 3;
  cfg.out_dir = (scratch_dir() / "standard_out").string();
  CHECK(cli::run_analyze(cfg) == 0);

  auto j = nlohmann::json::parse(slurp(fs::path(cfg.out_dir) /
                                       "findings.json"));
  CHECK(j["mismatch_count"] == 0);
  CHECK(j["records"].size() == 6);
  for (const auto& r : j["records"]) CHECK(r["verdict"] == "match");
}

TEST_CASE("binary exit codes and deterministic outputs") {
  auto cfgp = write_config("bin.cfg",
                           base_b_config +
                               "analyses = averaging\n"
                               "averaging_points = 2\n"
                               "averaging_max_order = 2\n"
                               "averaging_r_max = 5\n"
                               "oracle_h0 = 1/20\n");
  auto out1 = scratch_dir() / "bin_out1";
  auto out2 = scratch_dir() / "bin_out2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  CHECK(run_binary("analyze --config " + cfgp.string() + " --out " +
                   out1.string()) == 0);
  CHECK(run_binary("analyze --config " + cfgp.string() + " --out " +
                   out2.string()) == 0);
  // Byte-identical reports on identical configs.
  CHECK(slurp(out1 / "averaging.json") == slurp(out2 / "averaging.json"));
  CHECK(slurp(out1 / "manifest.json") == slurp(out2 / "manifest.json"));
  auto j = nlohmann::json::parse(slurp(out1 / "averaging.json"));
  CHECK(j["pass"] == true);
  CHECK(j["orders"].size() == 2);
  for (const auto& o : j["orders"]) {
    CHECK(o.contains("tolerance"));
    CHECK(o["pass"] == true);
  }

  // Config errors exit 3.
  auto bad = write_config("bin_bad.cfg", base_b_config);
  CHECK(run_binary("analyze --config " + bad.string() +
                   " 2>/dev/null") == 3);
  CHECK(run_binary("analyze --config /nonexistent.cfg 2>/dev/null") == 3);
  CHECK(run_binary("selftest --tolerance -1 2>/dev/null") == 3);

  // Engine-side failure (absurd oracle tolerance) exits 2.
  auto strict = write_config("bin_strict.cfg",
                             base_b_config +
                                 "analyses = averaging\n"
                                 "averaging_points = 1\n"
                                 "averaging_max_order = 1\n"
                                 "averaging_r_max = 5\n"
                                 "oracle_h0 = 1/20\n"
                                 "oracle_rel_tol_low = 1e-300\n");
  CHECK(run_binary("analyze --config " + strict.string() + " --out " +
                   (scratch_dir() / "bin_strict_out").string() +
                   " 2>/dev/null") == 2);

  // Selftest passes on a fresh build.
  CHECK(run_binary("selftest >/dev/null") == 0);
}
