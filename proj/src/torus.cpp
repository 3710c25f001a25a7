#include "zerohopf/torus.hpp"

#include <algorithm>
#include <cmath>

namespace zerohopf::torus {

using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

Vector2d newton_equilibrium(const AveragedSet& av, Vector2d x,
                            double tol = 1e-9, int max_iters = 40) {
  for (int it = 0; it < max_iters; ++it) {
    VectorXd g = av.g(x, 1);
    if (g.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + x.norm())) break;
    MatrixXd J = av.g_derivatives(x, 1, 1).matrix();
    Eigen::FullPivLU<MatrixXd> lu(J);
    if (!lu.isInvertible())
      throw CrossingError("equilibrium continuation: singular Jacobian");
    x -= lu.solve(g).head<2>();
  }
  if (av.g(x, 1).lpNorm<Eigen::Infinity>() > tol)
    throw CrossingError("equilibrium continuation lost Newton convergence");
  return x;
}

struct EquilibriumEig {
  Vector2d x;
  double re = 0.0;   // real part of the eigenvalue pair (tr/2)
  double det = 0.0;
  double disc = 0.0; // det − (tr/2)²; > 0 for a complex pair
};

EquilibriumEig eigen_at(const MuFamily& family, double mu, const Vector2d& seed) {
  AveragedSet av = family(mu);
  EquilibriumEig e;
  e.x = newton_equilibrium(av, seed);
  Matrix2d J = av.g_derivatives(e.x, 1, 1).matrix();
  e.re = 0.5 * J.trace();
  e.det = J.determinant();
  e.disc = e.det - e.re * e.re;
  return e;
}

}  // namespace

CrossingData find_crossing(const MuFamily& family, double mu_lo, double mu_hi,
                           const Eigen::Vector2d& equilibrium_seed,
                           std::string parameter_name) {
  if (!(mu_hi > mu_lo)) throw CrossingError("empty parameter range");
  const double range = mu_hi - mu_lo;

  // Continuation grid to find a sign change of Re λ.
  const int kGrid = 24;
  std::vector<double> mus(kGrid + 1);
  std::vector<EquilibriumEig> eigs(kGrid + 1);
  Vector2d warm = equilibrium_seed;
  for (int i = 0; i <= kGrid; ++i) {
    mus[i] = mu_lo + range * i / kGrid;
    eigs[i] = eigen_at(family, mus[i], warm);
    warm = eigs[i].x;
  }
  int seg = -1, exact = -1;
  for (int i = 0; i <= kGrid; ++i) {
    if (eigs[i].re == 0.0) {
      exact = i;
      break;
    }
    if (i < kGrid && eigs[i].re * eigs[i + 1].re < 0.0) {
      seg = i;
      break;
    }
  }
  if (seg < 0 && exact < 0)
    throw CrossingError("no sign change of Re lambda in the parameter range");

  EquilibriumEig mid_eig;
  double mid;
  Vector2d x_warm;
  if (exact >= 0) {
    // A grid point sits exactly on the crossing; bisection would stall.
    mid = mus[exact];
    mid_eig = eigs[exact];
    x_warm = mid_eig.x;
  } else {
    double lo = mus[seg], hi = mus[seg + 1];
    double re_lo = eigs[seg].re;
    x_warm = eigs[seg].x;
    mid_eig = eigs[seg];
    mid = lo;
    for (int it = 0; it < 200; ++it) {
      mid = 0.5 * (lo + hi);
      mid_eig = eigen_at(family, mid, x_warm);
      x_warm = mid_eig.x;
      if (std::abs(mid_eig.re) <= 1e-10) break;
      if (re_lo * mid_eig.re < 0.0) {
        hi = mid;
      } else {
        lo = mid;
        re_lo = mid_eig.re;
      }
      if (hi - lo < 1e-15 * std::max(1.0, std::abs(mid))) break;
    }
  }
  if (std::abs(mid_eig.re) > 1e-10)
    throw CrossingError("bisection failed to reach |Re lambda| <= 1e-10");
  if (mid_eig.disc <= 0.0)
    throw CrossingError("eigenvalues are real at the crossing");
  const double mu0 = mid;
  const double omega0 = std::sqrt(mid_eig.disc);
  if (omega0 < 1e-9) throw CrossingError("crossing frequency below floor");

  // Transversal speed by Richardson-extrapolated centered differences.
  const double h = 1e-4 * range;
  auto re_at = [&](double mu) { return eigen_at(family, mu, x_warm).re; };
  double dh = (re_at(mu0 + h) - re_at(mu0 - h)) / (2.0 * h);
  double dh2 = (re_at(mu0 + 0.5 * h) - re_at(mu0 - 0.5 * h)) / h;
  const double d = (4.0 * dh2 - dh) / 3.0;
  if (std::abs(d) < 1e-9)
    throw CrossingError("transversal eigenvalue speed below floor");

  CrossingData data;
  data.parameter_name = std::move(parameter_name);
  data.mu0 = mu0;
  data.omega0 = omega0;
  data.d = d;
  Vector2d x0 = mid_eig.x;
  data.x_mu = [family, x0](double mu) {
    return newton_equilibrium(family(mu), x0);
  };
  return data;
}

NormalizedAveragedSet::NormalizedAveragedSet(AveragedSet av, Vector2d x0,
                                             Matrix2d L)
    : av_(std::move(av)), x0_(std::move(x0)), L_(L) {
  if (std::abs(L.determinant()) < 1e-12)
    throw NormalizationError("normalizing map is singular");
  Linv_ = L.inverse();
  Matrix2d J = av_.g_derivatives(x0_, 1, 1).matrix();
  Matrix2d R = Linv_ * J * L_;
  omega0 = R(1, 0);
  Matrix2d rot;
  rot << 0.0, -omega0, omega0, 0.0;
  block_defect = (R - rot).cwiseAbs().maxCoeff();
}

VectorXd NormalizedAveragedSet::g(const VectorXd& y, int i) const {
  Vector2d x = x0_ + L_ * y.head<2>();
  return Linv_ * av_.g(x, i);
}

DTensor NormalizedAveragedSet::g_derivatives(const VectorXd& y, int i,
                                             int k) const {
  Vector2d x = x0_ + L_ * y.head<2>();
  DTensor G = av_.g_derivatives(x, i, k);
  DTensor H(2, 2, k);
  std::vector<int> jdx(k, 0), idx(k, 0);
  // H^c_{j1..jk} = Σ_p Linv(c,p) G^p_{i1..ik} Π_s L(i_s, j_s)
  auto advance = [](std::vector<int>& v) {
    for (int s = static_cast<int>(v.size()) - 1; s >= 0; --s) {
      if (++v[s] < 2) return true;
      v[s] = 0;
    }
    return false;
  };
  do {
    for (int c = 0; c < 2; ++c) {
      double sum = 0.0;
      std::fill(idx.begin(), idx.end(), 0);
      if (k == 0) {
        for (int p = 0; p < 2; ++p) sum += Linv_(c, p) * G.at(p, idx);
      } else {
        do {
          double w = 1.0;
          for (int s = 0; s < k; ++s) w *= L_(idx[s], jdx[s]);
          if (w != 0.0)
            for (int p = 0; p < 2; ++p) sum += Linv_(c, p) * G.at(p, idx) * w;
        } while (advance(idx));
      }
      H.at(c, jdx) = sum;
    }
  } while (k > 0 && advance(jdx));
  return H;
}

NormalizedAveragedSet jordan_normalize(const AveragedSet& av,
                                       const Eigen::Vector2d& x0) {
  Matrix2d J = av.g_derivatives(x0, 1, 1).matrix();
  const double re = 0.5 * J.trace();
  const double disc = J.determinant() - re * re;
  if (disc <= 1e-18)
    throw NormalizationError("Jacobian has real or defective eigenvalues");
  const double w = std::sqrt(disc);
  // Complex eigenvector q of λ = re + i w, scaled so its second component
  // is 1 (the rotation block then maps to the identity transform):
  // q1 = −J12 / (J11 − λ) when the row is usable, else (J22 − λ)/J21.
  std::complex<double> lambda(re, w);
  std::complex<double> q1;
  if (std::abs(J(0, 1)) + std::abs(J(0, 0) - lambda) >
      std::abs(J(1, 0)) + std::abs(J(1, 1) - lambda)) {
    if (std::abs(J(0, 0) - lambda) < 1e-15)
      throw NormalizationError("defective Jacobian");
    q1 = -J(0, 1) / (J(0, 0) - lambda);
  } else {
    if (std::abs(J(1, 0)) < 1e-15)
      throw NormalizationError("defective Jacobian");
    q1 = (lambda - J(1, 1)) / J(1, 0);
  }
  Matrix2d L;
  L << q1.imag(), q1.real(), 0.0, 1.0;
  if (std::abs(L.determinant()) < 1e-12)
    throw NormalizationError("eigenvector has no imaginary part");
  return NormalizedAveragedSet(av, x0, L);
}

NormalizedAveragedSet jordan_normalize_with(const AveragedSet& av,
                                            const Eigen::Vector2d& x0,
                                            const Eigen::Matrix2d& L) {
  return NormalizedAveragedSet(av, x0, L);
}

Matrix2d case_a_normalizing_map(double abar, double beta) {
  const double c = -2.0 * beta * (abar * abar - 2.0) / (abar * abar + 4.0);
  Matrix2d L;
  L << -2.0 * c, c * abar, 0.0, 1.0;
  return L;
}

Vector2d case_a_critical_equilibrium(double abar, double beta) {
  const double r = std::abs(beta) * std::sqrt(2.0 * (2.0 - abar * abar));
  return {r, -abar * beta / r};
}

double lyapunov_l1(const DTensor& d2, const DTensor& d3, double omega0) {
  if (std::abs(omega0) < 1e-9)
    throw NormalizationError("rotation rate below floor in lyapunov_l1");
  const double cubic = d3.at(0, {0, 0, 0}) + d3.at(0, {0, 1, 1}) +
                       d3.at(1, {0, 0, 1}) + d3.at(1, {1, 1, 1});
  const double quad =
      d2.at(0, {0, 1}) * (d2.at(0, {0, 0}) + d2.at(0, {1, 1})) -
      d2.at(1, {0, 1}) * (d2.at(1, {0, 0}) + d2.at(1, {1, 1})) -
      d2.at(0, {0, 0}) * d2.at(1, {0, 0}) +
      d2.at(0, {1, 1}) * d2.at(1, {1, 1});
  return cubic / 8.0 + quad / (8.0 * omega0);
}

double lyapunov_l1(const NormalizedAveragedSet& ns) {
  Vector2d origin = Vector2d::Zero();
  return lyapunov_l1(ns.g_derivatives(origin, 1, 2),
                     ns.g_derivatives(origin, 1, 3), ns.omega0);
}

namespace {

double wrap_pi(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

double rational_distance(double rot, int max_q) {
  double frac = rot - std::floor(rot);
  double best = std::numeric_limits<double>::infinity();
  for (int q = 1; q <= max_q; ++q)
    for (int p = 0; p <= q; ++p)
      best = std::min(best, std::abs(frac - static_cast<double>(p) / q));
  return best;
}

}  // namespace

TorusReport detect_invariant_curve(const Map2& map, const Vector2d& center,
                                   const Vector2d& seed,
                                   const CurveOptions& opts) {
  TorusReport rep;
  const double r0 = (seed - center).norm();
  const double escape_r =
      opts.escape_radius > 0.0 ? opts.escape_radius : 100.0 * std::max(r0, 1e-12);
  const double fp_tol =
      opts.fixed_point_tol > 0.0 ? opts.fixed_point_tol : 1e-3 * r0;
  const int transient =
      static_cast<int>(opts.iterations * opts.transient_fraction);

  Vector2d p = seed;
  for (int k = 0; k < opts.iterations; ++k) {
    try {
      p = map(p);
    } catch (const std::exception&) {
      rep.verdict = "escaped";
      rep.iterates = static_cast<int>(rep.points.size());
      return rep;
    }
    if (!p.allFinite() || (p - center).norm() > escape_r) {
      rep.verdict = "escaped";
      rep.iterates = static_cast<int>(rep.points.size());
      return rep;
    }
    if ((p - center).norm() < fp_tol) {
      rep.verdict = "no curve: converged to fixed point";
      rep.iterates = static_cast<int>(rep.points.size());
      return rep;
    }
    if (k >= transient) rep.points.push_back(p);
  }
  rep.iterates = static_cast<int>(rep.points.size());
  if (rep.iterates < opts.min_recorded) {
    rep.verdict = "too few recorded iterates";
    return rep;
  }

  // Steadily shrinking radius means the orbit is still spiralling in.
  const int quarter = rep.iterates / 4;
  double r_head = 0.0, r_tail = 0.0;
  for (int k = 0; k < quarter; ++k) {
    r_head += (rep.points[k] - center).norm();
    r_tail += (rep.points[rep.iterates - 1 - k] - center).norm();
  }
  if (quarter > 0 && r_tail < 0.5 * r_head) {
    rep.verdict = "no curve: converged to fixed point";
    return rep;
  }

  // Rotation number: circular mean of the wrapped angular advances.
  std::vector<double> theta(rep.iterates), rho(rep.iterates);
  for (int k = 0; k < rep.iterates; ++k) {
    Vector2d v = rep.points[k] - center;
    theta[k] = std::atan2(v(1), v(0));
    rho[k] = v.norm();
  }
  double cs = 0.0, sn = 0.0;
  for (int k = 0; k + 1 < rep.iterates; ++k) {
    double d = wrap_pi(theta[k + 1] - theta[k]);
    cs += std::cos(d);
    sn += std::sin(d);
  }
  rep.rotation_number = std::atan2(sn, cs) / (2.0 * M_PI);

  // Periodic trigonometric least-squares fit of ρ(θ).
  const int M = opts.harmonics;
  MatrixXd A(rep.iterates, 2 * M + 1);
  VectorXd b(rep.iterates);
  for (int k = 0; k < rep.iterates; ++k) {
    A(k, 0) = 1.0;
    for (int m = 1; m <= M; ++m) {
      A(k, 2 * m - 1) = std::cos(m * theta[k]);
      A(k, 2 * m) = std::sin(m * theta[k]);
    }
    b(k) = rho[k];
  }
  VectorXd coef = A.colPivHouseholderQr().solve(b);
  rep.closure_defect = (A * coef - b).lpNorm<Eigen::Infinity>();

  double xmin = rep.points[0](0), xmax = xmin;
  double ymin = rep.points[0](1), ymax = ymin;
  for (const auto& q : rep.points) {
    xmin = std::min(xmin, q(0));
    xmax = std::max(xmax, q(0));
    ymin = std::min(ymin, q(1));
    ymax = std::max(ymax, q(1));
  }
  rep.diameter = std::hypot(xmax - xmin, ymax - ymin);

  const int samples = 256;
  rep.curve.reserve(samples);
  for (int s = 0; s < samples; ++s) {
    double th = 2.0 * M_PI * s / samples;
    double r = coef(0);
    for (int m = 1; m <= M; ++m)
      r += coef(2 * m - 1) * std::cos(m * th) + coef(2 * m) * std::sin(m * th);
    rep.curve.push_back(center + r * Vector2d(std::cos(th), std::sin(th)));
  }

  if (rational_distance(rep.rotation_number, opts.resonance_max_q) <
      opts.resonance_tol) {
    rep.verdict = "resonant rotation number";
    return rep;
  }
  if (rep.closure_defect > opts.closure_rel_tol * rep.diameter) {
    rep.verdict = "closure defect too large";
    return rep;
  }
  rep.curve_found = true;
  rep.verdict = "curve confirmed";
  return rep;
}

Vector2d map_fixed_point(const Map2& map, Vector2d x, double tol,
                         int max_iters) {
  for (int it = 0; it < max_iters; ++it) {
    Vector2d res = map(x) - x;
    if (res.lpNorm<Eigen::Infinity>() <= tol) return x;
    const double h = 1e-6 * (1.0 + x.norm());
    Matrix2d J;
    for (int j = 0; j < 2; ++j) {
      Vector2d xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      J.col(j) = (map(xp) - map(xm)) / (2.0 * h);
    }
    Matrix2d A = J - Matrix2d::Identity();
    if (std::abs(A.determinant()) < 1e-14)
      throw FixedPointError("singular Newton system for the section fixed point");
    x -= A.inverse() * res;
    if (!x.allFinite())
      throw FixedPointError("section fixed point Newton diverged");
  }
  throw FixedPointError("section fixed point Newton did not converge");
}

SectionChart section_chart(const stability::SpatialSection& section) {
  SectionChart c;
  c.normal = section.normal.normalized();
  c.offset = section.offset / section.normal.norm();
  int least = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(c.normal(i)) < std::abs(c.normal(least))) least = i;
  Vector3d k = Vector3d::Zero();
  k(least) = 1.0;
  c.e1 = (k - k.dot(c.normal) * c.normal).normalized();
  c.e2 = c.normal.cross(c.e1);
  return c;
}

namespace {

Map2 return_map_impl(stability::Field3 f, stability::SpatialSection section,
                     SectionMapOptions opts) {
  SectionChart chart = section_chart(section);
  return [f = std::move(f), section, chart,
          opts = std::move(opts)](const Vector2d& u) -> Vector2d {
    Vector3d x = chart.embed(u);
    for (int attempt = 0; attempt <= opts.max_skips; ++attempt) {
      stability::Crossing c = stability::next_crossing(
          f, section, x, opts.max_time, opts.rel_tol, opts.abs_tol);
      if (!opts.accept || opts.accept(c.state)) return chart.project(c.state);
      x = c.state;
    }
    throw stability::SectionError("no accepted crossing within the skip budget");
  };
}

}  // namespace

Map2 section_return_map(const stability::Field3& f,
                        const stability::SpatialSection& section,
                        const SectionMapOptions& opts) {
  return return_map_impl(f, section, opts);
}

Map2 reversed_section_return_map(const stability::Field3& f,
                                 const stability::SpatialSection& section,
                                 const SectionMapOptions& opts) {
  stability::Field3 g = [f](const Vector3d& x) -> Vector3d { return -f(x); };
  stability::SpatialSection rev = section;
  rev.direction = -section.direction;
  return return_map_impl(std::move(g), rev, opts);
}

namespace {

struct MultiplierProbe {
  Vector2d fp;
  double excess = 0.0;
  bool complex_pair = false;
};

MultiplierProbe probe_multipliers(const Map2& map, const Vector2d& guess) {
  MultiplierProbe out;
  out.fp = map_fixed_point(map, guess);
  const double h = 1e-5 * (1.0 + out.fp.norm());
  Matrix2d J;
  for (int j = 0; j < 2; ++j) {
    Vector2d xp = out.fp, xm = out.fp;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (map(xp) - map(xm)) / (2.0 * h);
  }
  const double re = 0.5 * J.trace();
  const double det = J.determinant();
  const double disc = det - re * re;
  if (disc > 0.0) {
    out.complex_pair = true;
    out.excess = det - 1.0;  // |λ|² − 1 for a complex pair
  } else {
    const double s = std::sqrt(-disc);
    out.excess = std::max(std::abs(re + s), std::abs(re - s)) - 1.0;
  }
  return out;
}

}  // namespace

RegimeTable torus_regime_scan(const ScanProblem& prob, double mu_lo,
                              double mu_hi, int grid_points, double l1,
                              double mu0, double boundary_resolution) {
  RegimeTable table;
  table.l1 = l1;
  table.mu0 = mu0;
  if (grid_points < 2 || !(mu_hi > mu_lo)) return table;

  for (int i = 0; i < grid_points; ++i) {
    RegimeRow row;
    row.mu = mu_lo + (mu_hi - mu_lo) * i / (grid_points - 1);
    Map2 fwd = prob.forward(row.mu);
    try {
      MultiplierProbe mp = probe_multipliers(fwd, prob.fixed_point_guess(row.mu));
      row.fixed_point = mp.fp;
      row.multiplier_excess = mp.excess;
      row.complex_pair = mp.complex_pair;
    } catch (const std::exception& e) {
      row.verdict = std::string("no fixed point: ") + e.what();
      table.rows.push_back(row);
      continue;
    }
    Vector2d seed = prob.seed(row.mu, row.fixed_point);
    TorusReport fr =
        detect_invariant_curve(fwd, row.fixed_point, seed, prob.options);
    row.curve_forward = fr.curve_found;
    row.rotation_number = fr.rotation_number;
    row.verdict = "forward: " + fr.verdict;
    if (!fr.curve_found && prob.reversed) {
      TorusReport rr = detect_invariant_curve(prob.reversed(row.mu),
                                              row.fixed_point, seed,
                                              prob.options);
      row.curve_reversed = rr.curve_found;
      if (rr.curve_found) row.rotation_number = rr.rotation_number;
      row.verdict += "; reversed: " + rr.verdict;
    }
    table.rows.push_back(row);
  }

  // Existence boundary: bisection on the sign of |multiplier|² − 1 of the
  // section fixed point (the rotation-stability flip bounding the curve's
  // existence region).
  for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
    const RegimeRow& a = table.rows[i];
    const RegimeRow& b = table.rows[i + 1];
    if (!a.complex_pair || !b.complex_pair) continue;
    if (a.verdict.rfind("no fixed point", 0) == 0 ||
        b.verdict.rfind("no fixed point", 0) == 0)
      continue;
    if (a.multiplier_excess * b.multiplier_excess >= 0.0) continue;
    double lo = a.mu, hi = b.mu;
    double sign_lo = a.multiplier_excess;
    Vector2d warm = a.fixed_point;
    while (hi - lo > boundary_resolution) {
      double mid = 0.5 * (lo + hi);
      MultiplierProbe mp;
      try {
        mp = probe_multipliers(prob.forward(mid), warm);
      } catch (const std::exception&) {
        break;
      }
      warm = mp.fp;
      if (sign_lo * mp.excess < 0.0) {
        hi = mid;
      } else {
        lo = mid;
        sign_lo = mp.excess;
      }
    }
    table.boundary_found = true;
    table.boundary_mu = 0.5 * (lo + hi);
    break;
  }

  bool any_fwd = false, any_rev = false;
  double lo_exist = std::numeric_limits<double>::quiet_NaN();
  for (const RegimeRow& r : table.rows) {
    any_fwd = any_fwd || r.curve_forward;
    any_rev = any_rev || r.curve_reversed;
    if ((r.curve_forward || r.curve_reversed) && std::isnan(lo_exist))
      lo_exist = r.mu;
  }
  table.curve_stability = any_fwd ? "attracting" : (any_rev ? "repelling" : "?");
  if (table.boundary_found && !std::isnan(lo_exist))
    table.existence_side = lo_exist < table.boundary_mu ? '<' : '>';
  return table;
}

}  // namespace zerohopf::torus
