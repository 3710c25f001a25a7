#pragma once

// Command-line front end: run-configuration parsing (flat key = value text
// with exact-rational number support), orchestration of the analyses, and
// machine-readable JSON/CSV emission for external plotting.  Outputs are
// deterministic: identical config -> byte-identical files (fixed number
// formatting, no timestamps).

#include <array>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "zerohopf/systems.hpp"

namespace zerohopf::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses a decimal or an exact rational "p/q".  Throws ConfigError on
/// malformed input or zero denominator.
double parse_number(const std::string& text);

struct RunConfig {
  std::string case_tag;  // "A" | "B" | "standard"
  systems::CaseAFamily case_a;
  systems::CaseBFamily case_b;     // also used by the "standard" case
  int standard_level = 1;          // l of the vanishing pattern (standard)
  std::vector<double> eps_ladder;  // multiplier-scaling ladder
  std::vector<std::string> analyses;  // averaging|orbit|stability|torus|findings
  std::string out_dir = "out";

  // Tolerances (all must be positive).
  double ode_rel_tol = 1e-12;
  double ode_abs_tol = 1e-14;
  double newton_tol = 1e-10;
  double oracle_rel_tol_low = 1e-6;   // orders 1..3
  double oracle_rel_tol_high = 1e-4;  // orders 4..5

  // Analysis knobs.
  int averaging_points = 20;
  int averaging_max_order = 0;  // 0 -> 1 for case A, 5 for case B/standard
  double averaging_r_max = 30.0;  // case B/standard sample box
  double averaging_z_max = 2.0;
  double oracle_h0 = 0.0;  // leading eps node of the oracle fit; 0 -> default
  std::vector<std::array<double, 3>> orbit_seeds;  // original coordinates
  int orbit_crossings = 50;
  double zero_lo = 0.0, zero_hi = 100.0;  // amplitude window for the branch
  double scan_lo = 0.0, scan_hi = 0.0;    // torus scan window (parameter)
  int scan_points = 4;
  double boundary_resolution = 1e-3;
  double crossing_window = 1.0;  // half-width around the critical parameter
  double curve_sample_mu = std::numeric_limits<double>::quiet_NaN();
  int curve_iterations = 500;
  double section_max_time = 40.0;
  int findings_points = 20;

  /// Throws ConfigError naming the violated invariant.
  void validate() const;
};

/// Reads a flat key = value file ('#' comments, blank lines ignored).
/// Unknown keys are a ConfigError.
RunConfig parse_config(const std::string& path);

/// Runs the requested analyses, writing reports under cfg.out_dir.
/// Returns 0 on success, 2 on an engine invariant failure.
int run_analyze(const RunConfig& cfg);

/// Runs the quick built-in checks (jet arithmetic axioms, exactly solvable
/// scalar averaging, Routh-Hurwitz table, synthetic invariant-curve map).
/// `tolerance` must be positive (checked by the caller via exit code 3);
/// `force_mismatch` perturbs the scalar fixture to exercise the failure
/// path.  Returns 0 on success, 2 on any check failure.
int run_selftest(double tolerance = 1e-10, bool force_mismatch = false);

/// Full argv entry point (subcommands `analyze`, `selftest`).
int run_main(int argc, char** argv);

/// Fixed 17-significant-digit formatting used by every CSV cell.
std::string format17(double x);

}  // namespace zerohopf::cli
