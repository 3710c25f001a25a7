#include "zerohopf/oracles.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "zerohopf/lyapschmidt.hpp"
#include "zerohopf/torus.hpp"

namespace zerohopf::oracles {

using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

void require_case_a_domain(double abar) {
  if (!(abar * abar < 2.0) || abar == 0.0)
    throw std::domain_error("case A closed forms need 0 < abar^2 < 2");
}

std::string tag(const std::string& base, int k) {
  return base + "[" + std::to_string(k) + "]";
}

VectorXd vec1(double x) {
  VectorXd v(1);
  v << x;
  return v;
}

lyapschmidt::BranchChart case_b_chart(double lo = 0.5, double hi = 60.0) {
  lyapschmidt::BranchChart c;
  c.m = 1;
  c.u_min = vec1(lo);
  c.u_max = vec1(hi);
  return c;
}

}  // namespace

DiscrepancyRecord compare(std::string name, double printed, double engine) {
  DiscrepancyRecord r;
  r.name = std::move(name);
  r.printed = printed;
  r.engine = engine;
  r.abs_gap = std::abs(printed - engine);
  const double scale = std::max(std::abs(printed), std::abs(engine));
  r.rel_gap = scale > 0.0 ? r.abs_gap / scale : 0.0;
  r.verdict =
      (r.rel_gap <= 1e-6 || r.abs_gap <= 1e-9) ? "match" : "mismatch";
  return r;
}

DiscrepancyRecord invalid_domain(std::string name, double engine) {
  DiscrepancyRecord r;
  r.name = std::move(name);
  r.printed = std::numeric_limits<double>::quiet_NaN();
  r.engine = engine;
  r.abs_gap = std::numeric_limits<double>::quiet_NaN();
  r.rel_gap = std::numeric_limits<double>::quiet_NaN();
  r.verdict = "printed-formula-invalid-domain";
  return r;
}

Vector2d case_a_g1_closed(double abar, double alpha, double beta,
                          double gamma, double r, double z) {
  require_case_a_domain(abar);
  const double a = abar, s = 2.0 - a * a;
  const double g1 = -M_PI * r * (a * (beta + a * (alpha - gamma + r * z)) -
                                 alpha + gamma) /
                    std::pow(s, 1.5);
  const double g2 =
      M_PI / std::pow(s, 2.5) *
      (a * a * a * a * (-z) * (alpha - gamma + r * z)       // a^4 (-z)(...)
       - 3.0 * beta * a * a * a * z                         // -3 b a^3 z
       + a * a * (r + z * (alpha - gamma))                  // a^2 (r + z(...))
       + 6.0 * beta * a * z                                 // 6 b a z
       + 2.0 * z * (alpha - gamma + 2.0 * r * z));          // 2 z (...)
  return {g1, g2};
}

CaseAConstants case_a_constants(double abar, double alpha, double beta,
                                double gamma) {
  require_case_a_domain(abar);
  const double a = abar, a2 = abar * abar, s = 2.0 - a2;
  CaseAConstants c;
  c.d0 = (gamma - alpha - beta * a * (a2 - 1.0)) *
         (alpha * (a2 - 1.0) + a * (beta - a * gamma) + gamma);
  c.d1 = gamma - alpha + beta * a;
  c.ell = beta / a *
          (16.0 * beta * (2.0 * beta + 1.0)                       // 16b(2b+1)
           + 3.0 * (1.0 - 2.0 * beta) * (1.0 - 2.0 * beta) * a2 * a2 * a2
           + (-40.0 * beta * beta + 6.0 * beta + 9.0) * a2 * a2
           + 2.0 * (2.0 * beta + 1.0) * (4.0 * beta + 5.0) * a2);
  c.ell1 = c.ell / (std::sqrt(s) * (a2 + 4.0) * (a2 + 4.0));
  c.gamma_bar = alpha - a * beta;
  c.omega0 = std::abs(beta) * a2 / std::pow(s, 1.5);
  c.transversal_speed = 1.0 / (2.0 * a2 * std::sqrt(s));
  c.char_c1 = c.d1 / (a2 * std::sqrt(s));
  c.char_c0 = c.d0 / (a2 * s * s * s);

  // (a^2-2) (alpha + b a (a^2-1) - gamma) (alpha (a^2-1) + a (b - a gamma)
  // + gamma) under the square root of the r display, times 2.
  const double fac1 = alpha + beta * a * (a2 - 1.0) - gamma;
  const double fac2 = alpha * (a2 - 1.0) + a * (beta - a * gamma) + gamma;
  c.r_radicand = 2.0 * (a2 - 2.0) * fac1 * fac2;
  c.r_bar_valid = c.r_radicand >= 0.0;
  if (c.r_bar_valid) {
    const double root = std::sqrt(c.r_radicand) / (a2 * a);
    c.r_bar_plus = root;
    c.r_bar_minus = -root;
  } else {
    c.r_bar_plus = c.r_bar_minus = std::numeric_limits<double>::quiet_NaN();
  }

  // (-alpha + alpha a^2 - a^2 gamma + b a + gamma) /
  // ((2-a^2)(alpha + b a^3 - b a - gamma)) under the z square root.
  const double znum = -alpha + alpha * a2 - a2 * gamma + beta * a + gamma;
  const double zden = s * (alpha + beta * a2 * a - beta * a - gamma);
  c.z_radicand = znum / zden;
  c.z_bar_valid = c.z_radicand >= 0.0;
  if (c.z_bar_valid) {
    const double root = a * std::sqrt(c.z_radicand);
    c.z_bar_plus = root;
    c.z_bar_minus = -root;
  } else {
    c.z_bar_plus = c.z_bar_minus = std::numeric_limits<double>::quiet_NaN();
  }

  c.det_Dg1 = -4.0 * M_PI * M_PI * fac1 * fac2 /
              (a2 * (a2 - 2.0) * (a2 - 2.0) * (a2 - 2.0));
  return c;
}

Vector2d case_b_g1(const systems::CaseBFamily& f, double r, double z) {
  const double w = f.omega, w2 = w * w, w3 = w2 * w;
  const double a1 = f.alpha[0], g1 = f.gamma[0];
  return {M_PI * r * (a1 + g1 * (1.0 - w2)) / w3,
          -2.0 * M_PI * z * (g1 + a1 * (1.0 - w2)) / w3};
}

Vector2d case_b_g2(const systems::CaseBFamily& f, double r, double z) {
  const double w = f.omega, w2 = w * w;
  const double w3 = w2 * w, w5 = w3 * w2, w6 = w3 * w3, w7 = w6 * w;
  const double a1 = f.alpha[0], a2 = f.alpha[1];
  const double b1 = f.beta[0];
  const double g1 = f.gamma[0], g2 = f.gamma[1];
  const double first =
      M_PI / (2.0 * w6) *
      (M_PI * r * std::pow(a1 + g1 * (1.0 - w2), 2)        // pi r (...)^2
       - w3 * (r * (a1 * z - 2.0 * (a2 + g2) + g1 * (3.0 * z - b1))
               - 2.0 * g2 * r * w5                         // -2 g2 r w^5
               + 2.0 * z * (a1 + g1) * (2.0 * a1 + g1))    // 2z(a1+g1)(2a1+g1)
       + w * (a1 + g1) * (r * (4.0 * z - 3.0 * b1)         // w(a1+g1)(...)
                          + 6.0 * z * (a1 + g1)));
  const double second =
      M_PI / (2.0 * w7) *
      (r * r * (1.0 - w2) * (a1 * (w2 - 1.0) + g1 * (2.0 * w2 - 1.0))
       + 2.0 * r * (w2 - 1.0) * (a1 + g1) *
             (a1 * (2.0 * w2 - 3.0) + g1 * (w2 - 3.0))
       + 2.0 * w * z *
             (2.0 * M_PI * std::pow(a1 * (1.0 - w2) + g1, 2)  // 2pi(...)^2
              + 2.0 * a2 * w5                                 // 2 a2 w^5
              + w3 * (a1 * (z - b1) - 2.0 * (a2 + g2))        // w^3 (...)
              - 3.0 * w * (a1 + g1) * (z - b1)));             // -3w(a1+g1)(..)
  return {first, second};
}

Vector2d case_b_g3(const systems::CaseBFamily& f, double r, double z) {
  const double w = f.omega, w2 = w * w;
  const double w4 = w2 * w2, w5 = w4 * w, w6 = w4 * w2, w7 = w6 * w;
  const double a3 = f.alpha[2];
  const double b1 = f.beta[0], b2 = f.beta[1];
  const double g1 = f.gamma[0], g2 = f.gamma[1], g3 = f.gamma[2];
  const double first =
      M_PI / (16.0 * w5) *
      (g1 * r * r * r * (1.0 - w2)                   // g1 r^3 (1 - w^2)
       + 16.0 * g1 * g1 * r * r * (w2 - 1.0)         // 16 g1^2 r^2 (w^2-1)
       + 4.0 * r *
             (4.0 * w2 * (a3 - b1 * g2 - b2 * g1 -
                          3.0 * g1 * g1 * g1 * (w4 - 3.0 * w2 + 2.0) -
                          g3 * w2 + g3)
              + g1 * (8.0 - 3.0 * w2) * z * z        // g1 (8-3w^2) z^2
              + z * (b1 * g1 * (w2 - 6.0)            // z ( b1 g1 (w^2-6)
                     - 2.0 * w * (w2 - 2.0) *
                           (M_PI * g1 * g1 * (w2 - 2.0) + g2 * w)))
       - 8.0 * g1 * w2 * z *
             (2.0 * (b1 * g1 * (w2 + 2.0) +
                     2.0 * w * (w2 - 2.0) *
                         (M_PI * g1 * g1 * (w2 - 2.0) + 2.0 * g2 * w))
              + g1 * (11.0 * w2 - 26.0) * z));       // g1 (11w^2-26) z
  const double second =
      M_PI / (24.0 * w7) *
      (r * r *
           (6.0 * w2 * (b1 * g1 * (w2 - 3.0) -
                        2.0 * w * (w2 - 1.0) *
                            (M_PI * g1 * g1 * (w2 - 2.0) + g2 * w))
            + g1 * (2.0 * w6 - 29.0 * w4 + 37.0 * w2 - 10.0) * z)
       + 12.0 * g1 * r * w2 *
             (2.0 * (b1 * g1 * (w4 + 3.0 * w2 - 6.0) +
                     2.0 * w * (w4 - 3.0 * w2 + 2.0) *
                         (M_PI * g1 * g1 * (w2 - 2.0) + 2.0 * g2 * w))
              + 3.0 * g1 * (w4 - 7.0 * w2 + 6.0) * z)
       + 2.0 * w2 * z *
             (4.0 * w2 *
                  (6.0 * a3 * (w2 - 1.0)             // 6 a3 (w^2-1)
                   - 3.0 * b2 * g1 * (w2 - 4.0)      // -3 b2 g1 (w^2-4)
                   + g1 * (w2 - 2.0) *
                         (g1 * g1 * (15.0 * (w2 - 1.0) +
                                     4.0 * M_PI * M_PI * (w2 - 2.0) *
                                         (w2 - 2.0)) +
                          12.0 * M_PI * g2 * w * (w2 - 2.0))
                   - 6.0 * g3)                       // -6 g3
              - 3.0 * b1 * b1 * g1 * (w2 + 6.0)      // -3 b1^2 g1 (w^2+6)
              + 12.0 * b1 * w *
                    (2.0 * M_PI * g1 * g1 * (w4 - 4.0) -
                     g2 * w * (w2 - 4.0))
              + 9.0 * g1 * (w2 - 6.0) * z * z        // 9 g1 (w^2-6) z^2
              + 6.0 * z *
                    (2.0 * w * (w2 - 4.0) *
                         (3.0 * M_PI * g1 * g1 * (w2 - 2.0) + g2 * w) -
                     b1 * g1 * (w2 - 12.0))));
  return {first, second};
}

double case_b_f1(const systems::CaseBFamily& f, double r) {
  const double w = f.omega, w2 = w * w;
  return M_PI * r *
         (f.alpha[1] - f.beta[0] * f.gamma[0] + f.gamma[1] * (1.0 - w2)) /
         (w2 * w);
}

double case_b_delta(const systems::CaseBFamily& f) {
  const double w = f.omega, w2 = w * w;
  const double den = f.gamma[0] * (1.0 - w2);
  if (std::abs(den) < 1e-12)
    throw std::domain_error("delta undefined: gamma_1 (1 - omega^2) = 0");
  return (f.beta[0] * f.gamma[1] + f.beta[1] * f.gamma[0] +
          std::pow(f.gamma[0], 3) * (w2 * w2 - 3.0 * w2 + 2.0) +
          f.gamma[2] * (w2 - 1.0) - f.alpha[2]) /
         den;
}

double case_b_f2(const systems::CaseBFamily& f, double r) {
  const double w = f.omega, w2 = w * w, w5 = w2 * w2 * w;
  return 3.0 * M_PI * f.gamma[0] * (w2 - 1.0) * r / (16.0 * w5) *
         (r * r - 16.0 * w2 / 3.0 * case_b_delta(f));
}

double case_b_lambda1(const systems::CaseBFamily& f) {
  return f.gamma[0] * (f.omega * f.omega - 2.0);
}

double case_b_lambda2(const systems::CaseBFamily& f) {
  return f.gamma[0] * (1.0 - f.omega * f.omega);
}

double case_b_rstar(const systems::CaseBFamily& f) {
  const double d = case_b_delta(f);
  if (d < 0.0) throw std::domain_error("r* undefined: delta < 0");
  return 4.0 * f.omega * std::sqrt(d / 3.0);
}

Vector2d standard_analysis_template(const systems::CaseBFamily& f, int l,
                                    double r, double z) {
  if (l < 1 || l > 4)
    throw std::invalid_argument("template requires 1 <= l <= 4");
  for (int i = 0; i < l; ++i)
    if (f.alpha[i] != 0.0 || f.gamma[i] != 0.0)
      throw std::invalid_argument(
          "template requires alpha_i = gamma_i = 0 for i <= l");
  const double w = f.omega, w2 = w * w, w3 = w2 * w;
  const double an = f.alpha[l], gn = f.gamma[l];
  return {M_PI * r * (an + gn * (1.0 - w2)) / w3,
          -2.0 * M_PI * z * (gn + an * (1.0 - w2)) / w3};
}

std::vector<DiscrepancyRecord> compare_case_a(const systems::CaseAFamily& f,
                                              int points, unsigned seed) {
  std::vector<DiscrepancyRecord> out;
  averaging::AveragedSet av(systems::case_a_standard_form(f));
  CaseAConstants cc = case_a_constants(f.abar, f.alpha, f.beta, f.gamma);
  Vector2d crit = torus::case_a_critical_equilibrium(f.abar, f.beta);

  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dr(0.5 * crit(0), 1.5 * crit(0));
  std::uniform_real_distribution<double> dz(crit(1) - 1.0, crit(1) + 1.0);
  for (int k = 0; k < points; ++k) {
    Vector2d x(dr(gen), dz(gen));
    VectorXd e = av.g(x, 1);
    Vector2d p =
        case_a_g1_closed(f.abar, f.alpha, f.beta, f.gamma, x(0), x(1));
    out.push_back(compare(tag("case_a.g1.r", k), p(0), e(0)));
    out.push_back(compare(tag("case_a.g1.z", k), p(1), e(1)));
  }

  torus::MuFamily fam = [f](double gamma) {
    systems::CaseAFamily g = f;
    g.gamma = gamma;
    return averaging::AveragedSet(systems::case_a_standard_form(g));
  };
  auto data = torus::find_crossing(fam, cc.gamma_bar - 1.0,
                                   cc.gamma_bar + 1.0, crit, "gamma");
  out.push_back(compare("case_a.gamma_bar", cc.gamma_bar, data.mu0));
  out.push_back(compare("case_a.omega0", cc.omega0, data.omega0));
  out.push_back(
      compare("case_a.transversal_speed", cc.transversal_speed, data.d));

  // Equilibrium and Jacobian of g1 at the family's own gamma.
  Vector2d x_eq = data.x_mu(f.gamma);
  const bool plus_branch = f.abar > 0.0;
  if (cc.r_bar_valid) {
    out.push_back(compare("case_a.equilibrium.r",
                          plus_branch ? cc.r_bar_plus : cc.r_bar_minus,
                          x_eq(0)));
  } else {
    out.push_back(invalid_domain("case_a.equilibrium.r", x_eq(0)));
  }
  if (cc.z_bar_valid) {
    out.push_back(compare("case_a.equilibrium.z",
                          plus_branch ? cc.z_bar_plus : cc.z_bar_minus,
                          x_eq(1)));
  } else {
    out.push_back(invalid_domain("case_a.equilibrium.z", x_eq(1)));
  }
  Eigen::Matrix2d J = av.g_derivatives(x_eq, 1, 1).matrix();
  out.push_back(compare("case_a.det_Dg1", cc.det_Dg1, J.determinant()));
  out.push_back(compare("case_a.char_poly.c1", cc.char_c1, -J.trace()));
  out.push_back(compare("case_a.char_poly.c0", cc.char_c0, J.determinant()));

  // First Lyapunov coefficient at the critical parameter.
  averaging::AveragedSet av_crit = fam(cc.gamma_bar);
  Vector2d x_crit = data.x_mu(cc.gamma_bar);
  auto ns = torus::jordan_normalize(av_crit, x_crit);
  out.push_back(compare("case_a.ell1", cc.ell1, torus::lyapunov_l1(ns)));
  return out;
}

std::vector<DiscrepancyRecord> compare_case_b(const systems::CaseBFamily& f,
                                              int points, unsigned seed) {
  std::vector<DiscrepancyRecord> out;
  averaging::AveragedSet av(systems::case_b_standard_form(f));

  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dr(1.0, 40.0);
  std::uniform_real_distribution<double> dz(-2.0, 2.0);
  for (int k = 0; k < points; ++k) {
    Vector2d x(dr(gen), dz(gen));
    VectorXd e1 = av.g(x, 1), e2 = av.g(x, 2), e3 = av.g(x, 3);
    Vector2d p1 = case_b_g1(f, x(0), x(1));
    Vector2d p2 = case_b_g2(f, x(0), x(1));
    Vector2d p3 = case_b_g3(f, x(0), x(1));
    out.push_back(compare(tag("case_b.g1.r", k), p1(0), e1(0)));
    out.push_back(compare(tag("case_b.g1.z", k), p1(1), e1(1)));
    out.push_back(compare(tag("case_b.g2.r", k), p2(0), e2(0)));
    out.push_back(compare(tag("case_b.g2.z", k), p2(1), e2(1)));
    out.push_back(compare(tag("case_b.g3.r", k), p3(0), e3(0)));
    out.push_back(compare(tag("case_b.g3.z", k), p3(1), e3(1)));
  }

  auto chart = case_b_chart();
  for (int k = 0; k < std::min(points, 5); ++k) {
    double r = dr(gen);
    double ef1 = lyapschmidt::bifurcation_f(av, chart, vec1(r), 1)(0);
    double ef2 = lyapschmidt::bifurcation_f(av, chart, vec1(r), 2)(0);
    out.push_back(compare(tag("case_b.f1", k), case_b_f1(f, r), ef1));
    out.push_back(compare(tag("case_b.f2", k), case_b_f2(f, r), ef2));
  }

  auto report = lyapschmidt::find_simple_zero(av, chart, 2, 0.5, 60.0);
  out.push_back(compare("case_b.rstar", case_b_rstar(f), report.u_star(0)));
  // Engine-side delta recovered from the engine's simple zero through the
  // same relation r* = 4 omega sqrt(delta/3).
  const double delta_eng =
      3.0 * report.u_star(0) * report.u_star(0) /
      (16.0 * f.omega * f.omega);
  out.push_back(compare("case_b.delta", case_b_delta(f), delta_eng));
  return out;
}

std::vector<DiscrepancyRecord> compare_standard_analysis(
    const systems::CaseBFamily& f, int l, int points, unsigned seed) {
  // Validates the vanishing pattern up front (throws otherwise).
  standard_analysis_template(f, l, 1.0, 0.0);
  std::vector<DiscrepancyRecord> out;
  averaging::AveragedSet av(systems::case_b_standard_form(f));
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dr(0.5, 30.0);
  std::uniform_real_distribution<double> dz(-2.0, 2.0);
  const std::string base = "standard_analysis.g" + std::to_string(l + 1);
  for (int k = 0; k < points; ++k) {
    Vector2d x(dr(gen), dz(gen));
    VectorXd e = av.g(x, l + 1);
    Vector2d p = standard_analysis_template(f, l, x(0), x(1));
    out.push_back(compare(tag(base + ".r", k), p(0), e(0)));
    out.push_back(compare(tag(base + ".z", k), p(1), e(1)));
  }
  return out;
}

}  // namespace zerohopf::oracles
