#include "zerohopf/cli.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "zerohopf/averaging.hpp"
#include "zerohopf/lyapschmidt.hpp"
#include "zerohopf/oracles.hpp"
#include "zerohopf/stability.hpp"
#include "zerohopf/torus.hpp"

namespace zerohopf::cli {

using json = nlohmann::ordered_json;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, const char* seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::strchr(seps, c)) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_plain(const std::string& t) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + t + "'");
  }
  if (pos != t.size()) throw ConfigError("not a number: '" + t + "'");
  return v;
}

std::vector<double> parse_list(const std::string& t) {
  std::vector<double> out;
  for (const auto& tok : split(t, ", \t")) out.push_back(parse_number(tok));
  return out;
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0))
    throw ConfigError(std::string("tolerance '") + name +
                      "' must be positive");
}

void require_eps(double v, const char* what) {
  if (!(v > 0.0 && v < 0.5))
    throw ConfigError(std::string(what) + " must lie in (0, 0.5)");
}

// -------- deterministic emission helpers --------

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

void write_json(const std::filesystem::path& p, const json& j) {
  write_text(p, j.dump(2) + "\n");
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ',';
    row += cells[i];
  }
  row += '\n';
  return row;
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

json record_json(const oracles::DiscrepancyRecord& r) {
  json j;
  j["name"] = r.name;
  if (std::isnan(r.printed))
    j["printed"] = nullptr;
  else
    j["printed"] = r.printed;
  j["engine"] = r.engine;
  if (std::isnan(r.abs_gap)) {
    j["abs_gap"] = nullptr;
    j["rel_gap"] = nullptr;
  } else {
    j["abs_gap"] = r.abs_gap;
    j["rel_gap"] = r.rel_gap;
  }
  j["verdict"] = r.verdict;
  return j;
}

// -------- full-flow plumbing shared by orbit/torus analyses --------

stability::Field3 rossler_field(const systems::RosslerParams& p) {
  return [p](const Vector3d& x) -> Vector3d {
    auto v = systems::rossler_rhs(p, {x(0), x(1), x(2)});
    return {v[0], v[1], v[2]};
  };
}

systems::RosslerParams case_a_params(const systems::CaseAFamily& f) {
  return {f.abar + f.eps * f.alpha, 1.0 + f.eps * f.beta,
          f.abar + f.eps * f.gamma};
}

systems::RosslerParams case_b_params(const systems::CaseBFamily& f) {
  auto poly = [&](const std::array<double, 5>& c) {
    double v = 0.0;
    for (int i = 4; i >= 0; --i) v = (v + c[i]) * f.eps;
    return v;
  };
  return {poly(f.alpha), f.omega * f.omega - 1.0 + poly(f.beta),
          poly(f.gamma)};
}

// theta on the case-A section z = 0: bisects the third coordinate of the
// transformed state over one revolution.
double case_a_section_theta(const systems::CaseAFamily& f, double r,
                            double z) {
  auto h = [&](double th) { return systems::case_a_to_rossler(f, th, r, z)[2]; };
  const int n = 64;
  double prev_th = 0.0, prev_v = h(0.0);
  for (int i = 1; i <= n; ++i) {
    double th = 2.0 * M_PI * i / n;
    double v = h(th);
    if (prev_v == 0.0) return prev_th;
    if (prev_v * v < 0.0) {
      double lo = prev_th, hi = th;
      for (int k = 0; k < 60; ++k) {
        double mid = 0.5 * (lo + hi);
        (h(lo) * h(mid) <= 0.0 ? hi : lo) = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev_th = th;
    prev_v = v;
  }
  throw std::runtime_error("transformed equilibrium never meets the section");
}

struct AnalysisFailure {
  std::string analysis;
  std::string message;
};

// -------- individual analyses --------

bool analysis_averaging(const RunConfig& cfg, const averaging::AveragedSet& av,
                        const std::filesystem::path& out) {
  const int max_order =
      cfg.averaging_max_order > 0 ? cfg.averaging_max_order
                                  : (cfg.case_tag == "A" ? 1 : 5);
  std::mt19937 gen(20260824u);
  std::vector<Vector2d> pts;
  if (cfg.case_tag == "A") {
    Vector2d crit = torus::case_a_critical_equilibrium(cfg.case_a.abar,
                                                       cfg.case_a.beta);
    std::uniform_real_distribution<double> dr(0.7 * crit(0), 1.3 * crit(0));
    std::uniform_real_distribution<double> dz(crit(1) - 0.5, crit(1) + 0.5);
    for (int k = 0; k < cfg.averaging_points; ++k)
      pts.emplace_back(dr(gen), dz(gen));
  } else {
    std::uniform_real_distribution<double> dr(1.0, cfg.averaging_r_max);
    std::uniform_real_distribution<double> dz(-cfg.averaging_z_max,
                                              cfg.averaging_z_max);
    for (int k = 0; k < cfg.averaging_points; ++k)
      pts.emplace_back(dr(gen), dz(gen));
  }

  // Custom eps ladder for the full-flow fit when the default leading node
  // would drive the trajectory out of the domain box.
  std::vector<double> eps_nodes;
  if (cfg.oracle_h0 > 0.0) {
    eps_nodes.push_back(0.0);
    for (int jlev = 0; jlev < 10; ++jlev) {
      double h = cfg.oracle_h0 * std::pow(0.8, jlev);
      eps_nodes.push_back(h);
      eps_nodes.push_back(-h);
    }
  }

  std::vector<double> max_gap(max_order, 0.0);
  for (const auto& p : pts) {
    VectorXd z(2);
    z << p(0), p(1);
    auto fitted = av.poincare_expansion_oracle(z, eps_nodes);
    for (int i = 1; i <= max_order; ++i) {
      VectorXd gi = av.g(z, i);
      double gap = (gi - fitted[i - 1]).norm() / (1.0 + gi.norm());
      max_gap[i - 1] = std::max(max_gap[i - 1], gap);
    }
  }

  bool pass = true;
  json per_order = json::array();
  for (int i = 1; i <= max_order; ++i) {
    double tol = i <= 3 ? cfg.oracle_rel_tol_low : cfg.oracle_rel_tol_high;
    bool ok = max_gap[i - 1] <= tol;
    pass = pass && ok;
    per_order.push_back({{"order", i},
                         {"max_scaled_gap", max_gap[i - 1]},
                         {"tolerance", tol},
                         {"pass", ok}});
  }
  json j;
  j["analysis"] = "averaging";
  j["points"] = cfg.averaging_points;
  j["orders"] = per_order;
  j["pass"] = pass;
  write_json(out / "averaging.json", j);
  return pass;
}

void analysis_orbit(const RunConfig& cfg, const averaging::AveragedSet& av,
                    const std::filesystem::path& out) {
  const auto& f = cfg.case_b;
  lyapschmidt::BranchChart chart;
  chart.m = 1;
  chart.u_min = VectorXd::Constant(1, cfg.zero_lo > 0 ? cfg.zero_lo : 1e-6);
  chart.u_max = VectorXd::Constant(1, cfg.zero_hi);
  auto report = lyapschmidt::find_simple_zero(av, chart, 2, cfg.zero_lo,
                                              cfg.zero_hi);
  lyapschmidt::z_series(av, chart, report);
  VectorXd seed = report.z0 + f.eps * report.z1 + f.eps * f.eps * report.z2;

  stability::PoincareMapHandle h{av.system(), cfg.ode_rel_tol,
                                 cfg.ode_abs_tol};
  auto orb = stability::locate_periodic_orbit(h, seed, f.eps);

  json j;
  j["analysis"] = "orbit";
  j["amplitude_zero"] = report.u_star(0);
  j["zero_residual"] = report.residual;
  j["z_series"] = {{"z0", {report.z0(0), report.z0(1)}},
                   {"z1", {report.z1(0), report.z1(1)}},
                   {"z2", {report.z2(0), report.z2(1)}}};
  j["eps"] = f.eps;
  j["seed"] = {seed(0), seed(1)};
  j["fixed_point"] = {orb.fixed_point(0), orb.fixed_point(1)};
  j["newton_residual"] = orb.residual;
  j["newton_tolerance"] = cfg.newton_tol;
  j["ode_tolerances"] = {{"rel", cfg.ode_rel_tol}, {"abs", cfg.ode_abs_tol}};
  json mults = json::array();
  bool stable = true;
  for (int i = 0; i < orb.multipliers.size(); ++i) {
    auto m = orb.multipliers(i);
    stable = stable && std::abs(m) < 1.0;
    mults.push_back(
        {{"re", m.real()}, {"im", m.imag()}, {"abs", std::abs(m)}});
  }
  j["multipliers"] = mults;
  j["liouville_defect"] = orb.liouville_defect;
  j["asymptotically_stable"] = stable;

  // Section crossings of the full flow from the configured seeds, tracked
  // toward the orbit's section fixed point (section x = 0, y > 0).
  if (!cfg.orbit_seeds.empty()) {
    auto field = rossler_field(case_b_params(f));
    stability::SpatialSection sec;
    sec.normal = Vector3d(1.0, 0.0, 0.0);
    sec.direction = -1;  // dx/dt = -y - z < 0 on the y > 0 half
    torus::SectionMapOptions mopts;
    mopts.max_time = cfg.section_max_time;
    mopts.rel_tol = cfg.ode_rel_tol;
    mopts.abs_tol = cfg.ode_abs_tol;
    mopts.accept = [](const Vector3d& s) { return s(1) > 0.0; };
    auto map = torus::section_return_map(field, sec, mopts);
    auto chart3 = torus::section_chart(sec);

    // The orbit's own crossing, Newton-refined on the return map.
    auto start = systems::case_b_to_rossler(f, 0.0, orb.fixed_point(0),
                                            orb.fixed_point(1));
    auto first = stability::next_crossing(
        field, sec, Vector3d(start[0], start[1], start[2]),
        cfg.section_max_time, cfg.ode_rel_tol, cfg.ode_abs_tol);
    Vector2d fp =
        torus::map_fixed_point(map, chart3.project(first.state), 1e-11);
    j["section_fixed_point"] = {fp(0), fp(1)};

    std::string csv = csv_row({"seed_index", "crossing", "u1", "u2",
                               "distance_to_fixed_point"});
    for (std::size_t s = 0; s < cfg.orbit_seeds.size(); ++s) {
      const auto& q = cfg.orbit_seeds[s];
      Vector3d x(q[0], q[1], q[2]);
      Vector2d u = chart3.project(x);
      for (int c = 1; c <= cfg.orbit_crossings; ++c) {
        u = map(u);
        csv += csv_row({std::to_string(s + 1), std::to_string(c),
                        format17(u(0)), format17(u(1)),
                        format17((u - fp).norm())});
      }
    }
    write_text(out / "crossings.csv", csv);
  }
  write_json(out / "orbit.json", j);
}

void analysis_stability(const RunConfig& cfg, const averaging::AveragedSet& av,
                        const std::filesystem::path& out) {
  const auto& f = cfg.case_b;
  lyapschmidt::BranchChart chart;
  chart.m = 1;
  chart.u_min = VectorXd::Constant(1, cfg.zero_lo > 0 ? cfg.zero_lo : 1e-6);
  chart.u_max = VectorXd::Constant(1, cfg.zero_hi);
  auto report = lyapschmidt::find_simple_zero(av, chart, 2, cfg.zero_lo,
                                              cfg.zero_hi);
  lyapschmidt::z_series(av, chart, report);

  auto A = stability::a_matrices(av, report.z0, report.z1, report.z2);
  auto ladder = stability::k_determined_ladder(A[0], A[1], A[2]);
  auto cls = stability::classify_ladder(ladder);

  json j;
  j["analysis"] = "stability";
  j["ladder"] = {{"fast", {{"rate", ladder.fast.rate},
                           {"coeff", ladder.fast.coeff}}},
                 {"slow", {{"rate", ladder.slow.rate},
                           {"coeff", ladder.slow.coeff}}},
                 {"offdiag_defect", ladder.offdiag_defect}};
  j["classification"] = stability::to_string(cls);

  if (!cfg.eps_ladder.empty()) {
    stability::PoincareMapHandle h{av.system(), cfg.ode_rel_tol,
                                   cfg.ode_abs_tol};
    std::string csv = csv_row({"eps", "fast_deviation", "slow_deviation"});
    std::vector<double> le, lf, ls;
    json per_eps = json::array();
    for (double eps : cfg.eps_ladder) {
      VectorXd seed = report.z0 + eps * report.z1 + eps * eps * report.z2;
      auto orb = stability::locate_periodic_orbit(h, seed, eps);
      double d0 = std::abs(orb.multipliers(0) - 1.0);
      double d1 = std::abs(orb.multipliers(1) - 1.0);
      double fast = std::max(d0, d1), slow = std::min(d0, d1);
      csv += csv_row({format17(eps), format17(fast), format17(slow)});
      le.push_back(std::log(eps));
      lf.push_back(std::log(fast));
      ls.push_back(std::log(slow));
      per_eps.push_back(
          {{"eps", eps}, {"fast", fast}, {"slow", slow}});
    }
    write_text(out / "multiplier_scaling.csv", csv);
    auto slope = [](const std::vector<double>& x,
                    const std::vector<double>& y) {
      double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0,
             sxy = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
      }
      return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };
    j["scaling"] = {{"rows", per_eps},
                    {"fast_slope", slope(le, lf)},
                    {"slow_slope", slope(le, ls)},
                    {"ode_tolerances",
                     {{"rel", cfg.ode_rel_tol}, {"abs", cfg.ode_abs_tol}}}};
  }
  write_json(out / "stability.json", j);
}

void analysis_torus(const RunConfig& cfg, const std::filesystem::path& out) {
  const auto f0 = cfg.case_a;
  torus::MuFamily fam = [f0](double gamma) {
    systems::CaseAFamily g = f0;
    g.gamma = gamma;
    return averaging::AveragedSet(systems::case_a_standard_form(g));
  };
  const double gamma_bar = f0.alpha - f0.abar * f0.beta;
  Vector2d crit = torus::case_a_critical_equilibrium(f0.abar, f0.beta);
  auto data = torus::find_crossing(fam, gamma_bar - cfg.crossing_window,
                                   gamma_bar + cfg.crossing_window, crit,
                                   "gamma");
  auto ns = torus::jordan_normalize(fam(data.mu0), data.x_mu(data.mu0));
  const double l1 = torus::lyapunov_l1(ns);

  json j;
  j["analysis"] = "torus";
  j["parameter"] = "gamma";
  j["crossing"] = {{"mu0", data.mu0},
                   {"omega0", data.omega0},
                   {"transversal_speed", data.d},
                   {"tolerance", 1e-10}};
  j["lyapunov_l1"] = l1;

  stability::SpatialSection sec;
  sec.normal = Vector3d(0.0, 0.0, 1.0);
  sec.direction = +1;
  torus::SectionMapOptions mopts;
  mopts.max_time = cfg.section_max_time;
  mopts.rel_tol = std::max(cfg.ode_rel_tol, 1e-10);
  mopts.abs_tol = std::max(cfg.ode_abs_tol, 1e-12);
  mopts.accept = [](const Vector3d& s) { return s(0) > 0.0; };

  auto field_at = [f0](double gamma) {
    systems::CaseAFamily g = f0;
    g.gamma = gamma;
    return rossler_field(case_a_params(g));
  };
  auto chart3 = torus::section_chart(sec);
  torus::ScanProblem prob;
  prob.forward = [&](double gamma) {
    return torus::section_return_map(field_at(gamma), sec, mopts);
  };
  prob.reversed = [&](double gamma) {
    return torus::reversed_section_return_map(field_at(gamma), sec, mopts);
  };
  prob.fixed_point_guess = [&](double gamma) -> Vector2d {
    systems::CaseAFamily g = f0;
    g.gamma = gamma;
    Vector2d eq = data.x_mu(gamma);
    double th = case_a_section_theta(g, eq(0), eq(1));
    auto p = systems::case_a_to_rossler(g, th, eq(0), eq(1));
    return chart3.project(Vector3d(p[0], p[1], p[2]));
  };
  prob.seed = [](double, const Vector2d& fp) -> Vector2d {
    return fp + Vector2d(0.05 * fp.norm() + 1e-4, 0.0);
  };
  prob.options.iterations = cfg.curve_iterations;
  prob.options.min_recorded = std::min(200, (2 * cfg.curve_iterations) / 5);
  prob.options.transient_fraction = 0.4;

  auto table =
      torus::torus_regime_scan(prob, cfg.scan_lo, cfg.scan_hi,
                               cfg.scan_points, l1, data.mu0,
                               cfg.boundary_resolution);

  std::string csv = csv_row({"gamma", "fp_u1", "fp_u2", "multiplier_excess",
                             "complex_pair", "curve_forward", "curve_reversed",
                             "rotation_number", "verdict"});
  json rows = json::array();
  for (const auto& r : table.rows) {
    csv += csv_row({format17(r.mu), format17(r.fixed_point(0)),
                    format17(r.fixed_point(1)),
                    format17(r.multiplier_excess),
                    r.complex_pair ? "1" : "0", r.curve_forward ? "1" : "0",
                    r.curve_reversed ? "1" : "0",
                    format17(r.rotation_number), quoted(r.verdict)});
    rows.push_back({{"gamma", r.mu},
                    {"multiplier_excess", r.multiplier_excess},
                    {"curve_forward", r.curve_forward},
                    {"curve_reversed", r.curve_reversed},
                    {"rotation_number", r.rotation_number},
                    {"verdict", r.verdict}});
  }
  write_text(out / "regime_scan.csv", csv);
  j["scan"] = {{"window", {cfg.scan_lo, cfg.scan_hi}},
               {"grid_points", cfg.scan_points},
               {"boundary_resolution", cfg.boundary_resolution},
               {"boundary_found", table.boundary_found},
               {"existence_side", std::string(1, table.existence_side)},
               {"curve_stability", table.curve_stability},
               {"rows", rows}};
  if (table.boundary_found) j["scan"]["boundary_gamma"] = table.boundary_mu;

  if (!std::isnan(cfg.curve_sample_mu)) {
    auto map = prob.forward(cfg.curve_sample_mu);
    Vector2d fp = torus::map_fixed_point(
        map, prob.fixed_point_guess(cfg.curve_sample_mu), 1e-10);
    auto rep = torus::detect_invariant_curve(map, fp,
                                             prob.seed(cfg.curve_sample_mu, fp),
                                             prob.options);
    std::string pcsv = csv_row({"index", "u1", "u2"});
    for (std::size_t i = 0; i < rep.points.size(); ++i)
      pcsv += csv_row({std::to_string(i), format17(rep.points[i](0)),
                       format17(rep.points[i](1))});
    write_text(out / "curve_points.csv", pcsv);
    j["curve_sample"] = {{"gamma", cfg.curve_sample_mu},
                         {"verdict", rep.verdict},
                         {"rotation_number", rep.rotation_number},
                         {"closure_defect", rep.closure_defect},
                         {"diameter", rep.diameter},
                         {"iterates", rep.iterates}};
  }
  write_json(out / "torus.json", j);
}

void analysis_findings(const RunConfig& cfg,
                       const std::filesystem::path& out) {
  std::vector<oracles::DiscrepancyRecord> recs;
  if (cfg.case_tag == "A")
    recs = oracles::compare_case_a(cfg.case_a, cfg.findings_points);
  else if (cfg.case_tag == "B")
    recs = oracles::compare_case_b(cfg.case_b, cfg.findings_points);
  else
    recs = oracles::compare_standard_analysis(cfg.case_b, cfg.standard_level,
                                              cfg.findings_points);
  json j;
  j["analysis"] = "findings";
  j["match_tolerance"] = {{"rel", 1e-6}, {"abs", 1e-9}};
  json arr = json::array();
  int mismatches = 0;
  for (const auto& r : recs) {
    if (r.verdict != "match") ++mismatches;
    arr.push_back(record_json(r));
  }
  j["records"] = arr;
  j["mismatch_count"] = mismatches;
  write_json(out / "findings.json", j);
}

json manifest_json(const RunConfig& cfg) {
  json m;
  m["tool"] = "zerohopf";
  m["case"] = cfg.case_tag;
  if (cfg.case_tag == "A") {
    m["parameters"] = {{"abar", cfg.case_a.abar},
                       {"alpha", cfg.case_a.alpha},
                       {"beta", cfg.case_a.beta},
                       {"gamma", cfg.case_a.gamma},
                       {"eps", cfg.case_a.eps}};
  } else {
    json p;
    p["omega"] = cfg.case_b.omega;
    p["alpha"] = cfg.case_b.alpha;
    p["beta"] = cfg.case_b.beta;
    p["gamma"] = cfg.case_b.gamma;
    p["eps"] = cfg.case_b.eps;
    if (cfg.case_tag == "standard") p["level"] = cfg.standard_level;
    m["parameters"] = p;
  }
  m["analyses"] = cfg.analyses;
  m["tolerances"] = {{"ode_rel_tol", cfg.ode_rel_tol},
                     {"ode_abs_tol", cfg.ode_abs_tol},
                     {"newton_tol", cfg.newton_tol},
                     {"oracle_rel_tol_low", cfg.oracle_rel_tol_low},
                     {"oracle_rel_tol_high", cfg.oracle_rel_tol_high}};
  if (!cfg.eps_ladder.empty()) m["eps_ladder"] = cfg.eps_ladder;
  return m;
}

}  // namespace

double parse_number(const std::string& text) {
  std::string t = trim(text);
  if (t.empty()) throw ConfigError("empty number");
  auto slash = t.find('/');
  if (slash == std::string::npos) return parse_plain(t);
  double num = parse_plain(trim(t.substr(0, slash)));
  double den = parse_plain(trim(t.substr(slash + 1)));
  if (den == 0.0) throw ConfigError("zero denominator in '" + t + "'");
  return num / den;
}

std::string format17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void RunConfig::validate() const {
  if (case_tag != "A" && case_tag != "B" && case_tag != "standard")
    throw ConfigError("case must be A, B, or standard");
  if (analyses.empty()) throw ConfigError("no analyses requested");
  const std::set<std::string> known{"averaging", "orbit", "stability",
                                    "torus", "findings"};
  for (const auto& a : analyses)
    if (!known.count(a)) throw ConfigError("unknown analysis '" + a + "'");
  require_positive(ode_rel_tol, "ode_rel_tol");
  require_positive(ode_abs_tol, "ode_abs_tol");
  require_positive(newton_tol, "newton_tol");
  require_positive(oracle_rel_tol_low, "oracle_rel_tol_low");
  require_positive(oracle_rel_tol_high, "oracle_rel_tol_high");
  require_positive(boundary_resolution, "boundary_resolution");

  auto has = [&](const char* a) {
    return std::find(analyses.begin(), analyses.end(), a) != analyses.end();
  };
  if (has("orbit") || has("stability")) {
    if (case_tag != "B")
      throw ConfigError("orbit/stability analyses require case B");
  }
  if (has("torus")) {
    if (case_tag != "A") throw ConfigError("torus analysis requires case A");
    if (!(scan_lo < scan_hi))
      throw ConfigError("torus analysis needs scan_lo < scan_hi");
    if (scan_points < 2) throw ConfigError("scan_points must be >= 2");
  }
  if (has("orbit") || has("torus") || has("stability")) {
    double eps = case_tag == "A" ? case_a.eps : case_b.eps;
    require_eps(eps, "eps");
  }
  for (double e : eps_ladder) require_eps(e, "every eps_ladder value");
  if (case_tag == "standard") {
    if (standard_level < 1 || standard_level > 4)
      throw ConfigError("level must be between 1 and 4");
    for (int i = 0; i < standard_level; ++i)
      if (case_b.alpha[i] != 0.0 || case_b.gamma[i] != 0.0)
        throw ConfigError(
            "standard case requires alpha_i = gamma_i = 0 for i <= level");
  }
  try {
    if (case_tag == "A")
      case_a.validate();
    else
      case_b.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (averaging_points < 1) throw ConfigError("averaging_points must be >= 1");
  if (!(averaging_r_max >= 1.0))
    throw ConfigError("averaging_r_max must be >= 1");
  require_positive(averaging_z_max, "averaging_z_max");
  if (oracle_h0 < 0.0) throw ConfigError("oracle_h0 must be >= 0");
  if (findings_points < 1) throw ConfigError("findings_points must be >= 1");
  if (averaging_max_order < 0 || averaging_max_order > 5)
    throw ConfigError("averaging_max_order must be between 0 and 5");
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  RunConfig cfg;
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) +
                                       ": empty key");
    if (!kv.emplace(key, val).second)
      throw ConfigError("duplicate key '" + key + "'");
  }

  auto take = [&](const char* key) -> std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    return &it->second;
  };
  auto num = [&](const char* key, double& slot) {
    if (auto* v = take(key)) slot = parse_number(*v);
  };
  auto integer = [&](const char* key, int& slot) {
    if (auto* v = take(key)) slot = static_cast<int>(parse_number(*v));
  };

  if (auto* v = take("case")) cfg.case_tag = trim(*v);
  if (auto* v = take("analyses")) cfg.analyses = split(*v, ", \t");
  if (auto* v = take("out")) cfg.out_dir = trim(*v);
  if (auto* v = take("eps_ladder")) cfg.eps_ladder = parse_list(*v);

  double eps = 0.0;
  num("eps", eps);
  cfg.case_a.eps = cfg.case_b.eps = eps;

  num("abar", cfg.case_a.abar);
  num("alpha", cfg.case_a.alpha);
  num("beta", cfg.case_a.beta);
  num("gamma", cfg.case_a.gamma);
  num("omega", cfg.case_b.omega);
  for (int i = 1; i <= 5; ++i) {
    num(("alpha" + std::to_string(i)).c_str(), cfg.case_b.alpha[i - 1]);
    num(("beta" + std::to_string(i)).c_str(), cfg.case_b.beta[i - 1]);
    num(("gamma" + std::to_string(i)).c_str(), cfg.case_b.gamma[i - 1]);
  }
  integer("level", cfg.standard_level);

  num("ode_rel_tol", cfg.ode_rel_tol);
  num("ode_abs_tol", cfg.ode_abs_tol);
  num("newton_tol", cfg.newton_tol);
  num("oracle_rel_tol_low", cfg.oracle_rel_tol_low);
  num("oracle_rel_tol_high", cfg.oracle_rel_tol_high);
  integer("averaging_points", cfg.averaging_points);
  integer("averaging_max_order", cfg.averaging_max_order);
  num("averaging_r_max", cfg.averaging_r_max);
  num("averaging_z_max", cfg.averaging_z_max);
  num("oracle_h0", cfg.oracle_h0);
  integer("orbit_crossings", cfg.orbit_crossings);
  num("zero_lo", cfg.zero_lo);
  num("zero_hi", cfg.zero_hi);
  num("scan_lo", cfg.scan_lo);
  num("scan_hi", cfg.scan_hi);
  integer("scan_points", cfg.scan_points);
  num("boundary_resolution", cfg.boundary_resolution);
  num("crossing_window", cfg.crossing_window);
  num("curve_sample_mu", cfg.curve_sample_mu);
  integer("curve_iterations", cfg.curve_iterations);
  num("section_max_time", cfg.section_max_time);
  integer("findings_points", cfg.findings_points);

  if (auto* v = take("orbit_seeds")) {
    for (const auto& triple : split(*v, ";")) {
      auto nums = parse_list(triple);
      if (nums.size() != 3)
        throw ConfigError("each orbit seed needs exactly 3 coordinates");
      cfg.orbit_seeds.push_back({nums[0], nums[1], nums[2]});
    }
  }

  static const std::set<std::string> known_keys = [] {
    std::set<std::string> k{
        "case",        "analyses",       "out",
        "eps_ladder",  "eps",            "abar",
        "alpha",       "beta",           "gamma",
        "omega",       "level",          "ode_rel_tol",
        "ode_abs_tol", "newton_tol",     "oracle_rel_tol_low",
        "oracle_rel_tol_high",           "averaging_points",
        "averaging_max_order",           "orbit_crossings",
        "averaging_r_max",               "averaging_z_max",
        "oracle_h0",   "zero_lo",        "zero_hi",
        "scan_lo",
        "scan_hi",     "scan_points",    "boundary_resolution",
        "crossing_window",               "curve_sample_mu",
        "curve_iterations",              "section_max_time",
        "findings_points",               "orbit_seeds"};
    for (int i = 1; i <= 5; ++i) {
      k.insert("alpha" + std::to_string(i));
      k.insert("beta" + std::to_string(i));
      k.insert("gamma" + std::to_string(i));
    }
    return k;
  }();
  for (const auto& [key, _] : kv)
    if (!known_keys.count(key)) throw ConfigError("unknown key '" + key + "'");

  cfg.validate();
  return cfg;
}

int run_analyze(const RunConfig& cfg) {
  std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  write_json(out / "manifest.json", manifest_json(cfg));

  std::unique_ptr<averaging::AveragedSet> av;
  if (cfg.case_tag == "A")
    av = std::make_unique<averaging::AveragedSet>(
        systems::case_a_standard_form(cfg.case_a));
  else
    av = std::make_unique<averaging::AveragedSet>(
        systems::case_b_standard_form(cfg.case_b));

  auto requested = [&](const char* a) {
    return std::find(cfg.analyses.begin(), cfg.analyses.end(), a) !=
           cfg.analyses.end();
  };
  std::vector<AnalysisFailure> failures;
  bool oracle_pass = true;
  auto attempt = [&](const char* name, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      failures.push_back({name, e.what()});
    }
  };
  if (requested("averaging"))
    attempt("averaging",
            [&] { oracle_pass = analysis_averaging(cfg, *av, out); });
  if (requested("orbit"))
    attempt("orbit", [&] { analysis_orbit(cfg, *av, out); });
  if (requested("stability"))
    attempt("stability", [&] { analysis_stability(cfg, *av, out); });
  if (requested("torus")) attempt("torus", [&] { analysis_torus(cfg, out); });
  if (requested("findings"))
    attempt("findings", [&] { analysis_findings(cfg, out); });

  for (const auto& fail : failures)
    std::cerr << "analysis '" << fail.analysis << "' failed: " << fail.message
              << "\n";
  if (!oracle_pass)
    std::cerr << "averaging check exceeded its oracle tolerance\n";
  return (failures.empty() && oracle_pass) ? 0 : 2;
}

int run_selftest(double tolerance, bool force_mismatch) {
  int failed = 0;
  auto check = [&](const char* name, bool ok) {
    std::cout << (ok ? "ok   " : "FAIL ") << name << "\n";
    if (!ok) ++failed;
  };

  {  // jet arithmetic axioms
    auto spec = systems::expansion_spec(2, 3);
    jets::Jet x = jets::Jet::variable(spec, 1, 0.7);
    jets::Jet y = jets::Jet::variable(spec, 2, -0.4);
    auto close = [&](const jets::Jet& a, const jets::Jet& b) {
      for (int s = 0; s < spec->num_slots(); ++s)
        if (std::abs(a.raw()[s] - b.raw()[s]) > 1e-12) return false;
      return true;
    };
    check("jet ring identity (x+y)(x-y) = x^2 - y^2",
          close((x + y) * (x - y), x * x - y * y));
    check("jet associativity (xy)x = x(yx)", close((x * y) * x, x * (y * x)));
    jets::Jet zero = x - x;
    bool all_zero = true;
    for (int s = 0; s < spec->num_slots(); ++s)
      all_zero = all_zero && zero.raw()[s] == 0.0;
    check("jet additive inverse", all_zero);
  }

  {  // exactly solvable scalar averaging: xdot = eps x, g_i = (2pi)^i z / i!
    systems::StandardFormSystem s;
    s.dim = 1;
    s.period = 2.0 * M_PI;
    s.omega.bounds = {{-100.0, 100.0}};
    s.jet_rhs = [](double, std::span<const double> st, int deg, int cap) {
      auto spec = systems::expansion_spec(1, deg, cap);
      jets::Jet eps = jets::Jet::variable(spec, 0, 0.0);
      jets::Jet x = systems::state_jet(spec, 1, st[0]);
      return std::vector<jets::Jet>{eps * x};
    };
    s.numeric_rhs = [](double, std::span<const double> st, double eps) {
      return std::vector<double>{eps * st[0]};
    };
    s.variational_rhs = [](double, std::span<const double> st, double eps,
                           int deg) {
      auto spec = systems::offset_spec(1, deg);
      jets::Jet x = systems::state_jet(spec, 0, st[0]);
      return std::vector<jets::Jet>{eps * x};
    };
    averaging::AveragedSet av(std::move(s));
    VectorXd z(1);
    z << 1.0;
    double fact = 1.0, pw = 1.0;
    bool ok = true;
    for (int i = 1; i <= 5; ++i) {
      fact *= i;
      pw *= 2.0 * M_PI;
      double expected = pw / fact + (force_mismatch ? 1e-3 : 0.0);
      ok = ok && std::abs(av.g(z, i)(0) - expected) <=
                     tolerance * std::abs(expected);
    }
    check("scalar linear averaging g_i = (2pi)^i z / i!", ok);
  }

  {  // Routh-Hurwitz table
    using stability::RouthHurwitz;
    check("Routh-Hurwitz classification",
          stability::routh_hurwitz_2(1.0, 1.0) == RouthHurwitz::Stable &&
              stability::routh_hurwitz_2(-1.0, 1.0) ==
                  RouthHurwitz::Unstable &&
              stability::routh_hurwitz_2(1.0, -1.0) ==
                  RouthHurwitz::Unstable &&
              stability::routh_hurwitz_2(0.0, 1.0) ==
                  RouthHurwitz::Marginal);
  }

  {  // synthetic invariant curve: rigid irrational rotation
    const double rho = (3.0 - std::sqrt(5.0)) / 2.0;
    Eigen::Rotation2D<double> R(2.0 * M_PI * rho);
    torus::Map2 map = [R](const Vector2d& p) -> Vector2d { return R * p; };
    auto rep = torus::detect_invariant_curve(map, Vector2d::Zero(),
                                             Vector2d(0.3, 0.0));
    check("synthetic rotation yields a confirmed invariant curve",
          rep.curve_found &&
              std::abs(rep.rotation_number - rho) < 1e-6);
  }

  return failed == 0 ? 0 : 2;
}

int run_main(int argc, char** argv) {
  CLI::App app{"zero-Hopf averaging and torus-bifurcation toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  auto* analyze = app.add_subcommand("analyze", "run the configured analyses");
  analyze->add_option("--config", config_path, "configuration file")
      ->required();
  analyze->add_option("--out", out_override, "output directory override");

  double tol = 1e-10;
  bool force = false;
  auto* self = app.add_subcommand("selftest", "run the built-in quick checks");
  self->add_option("--tolerance", tol, "comparison tolerance");
  self->add_flag("--force-mismatch", force)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (analyze->parsed()) {
    try {
      RunConfig cfg = parse_config(config_path);
      if (!out_override.empty()) cfg.out_dir = out_override;
      return run_analyze(cfg);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 3;
    }
  }
  if (!(tol > 0.0)) {
    std::cerr << "config error: tolerance must be positive\n";
    return 3;
  }
  return run_selftest(tol, force);
}

}  // namespace zerohopf::cli
