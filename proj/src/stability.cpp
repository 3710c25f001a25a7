#include "zerohopf/stability.hpp"

#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <sstream>

namespace zerohopf::stability {

namespace odeint = boost::numeric::odeint;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using jets::Jet;

namespace {

using State = std::vector<double>;

void check_domain(const systems::DomainBox& box, std::span<const double> x,
                  double t) {
  for (double v : x)
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "trajectory blew up at t = " << t;
      throw EscapeError(os.str());
    }
  if (!box.bounds.empty() && !box.contains(x)) {
    std::ostringstream os;
    os << "trajectory left the domain box at t = " << t;
    throw EscapeError(os.str());
  }
}

// Π(z) and, when jac != nullptr, the monodromy DΠ(z) and the integrated
// trace of the variational matrix (for the Liouville self-check).
VectorXd run_map(const PoincareMapHandle& h, const VectorXd& z, double eps,
                 MatrixXd* jac, double* trace_integral) {
  const int n = h.sys.dim;
  const bool with_var = jac != nullptr;
  State s(with_var ? n + n * n + 1 : n, 0.0);
  for (int i = 0; i < n; ++i) s[i] = z(i);
  if (with_var)
    for (int i = 0; i < n; ++i) s[n + i * n + i] = 1.0;

  std::vector<int> mindex(n, 0);
  auto rhs = [&](const State& x, State& dxdt, double t) {
    std::span<const double> st(x.data(), static_cast<std::size_t>(n));
    check_domain(h.sys.omega, st, t);
    dxdt.assign(x.size(), 0.0);
    if (!with_var) {
      auto v = h.sys.numeric_rhs(t, st, eps);
      for (int i = 0; i < n; ++i) dxdt[i] = v[i];
      return;
    }
    auto jets = h.sys.variational_rhs(t, st, eps, 1);
    MatrixXd J(n, n);
    for (int c = 0; c < n; ++c) {
      dxdt[c] = jets[c].value();
      for (int j = 0; j < n; ++j) {
        std::fill(mindex.begin(), mindex.end(), 0);
        mindex[j] = 1;
        J(c, j) = jets[c].coeff(mindex);
      }
    }
    // dM/dt = J M with M stored row-major after the state.
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += J(r, k) * x[n + k * n + c];
        dxdt[n + r * n + c] = acc;
      }
    dxdt[n + n * n] = J.trace();
  };

  auto stepper = odeint::make_controlled<
      odeint::runge_kutta_dopri5<State>>(h.abs_tol, h.rel_tol);
  odeint::integrate_adaptive(stepper, rhs, s, 0.0, h.sys.period,
                             h.sys.period / 64.0);

  VectorXd out(n);
  for (int i = 0; i < n; ++i) out(i) = s[i];
  if (with_var) {
    jac->resize(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) (*jac)(r, c) = s[n + r * n + c];
    if (trace_integral) *trace_integral = s[n + n * n];
  }
  return out;
}

}  // namespace

VectorXd time_T_map(const PoincareMapHandle& h, const VectorXd& z, double eps) {
  return run_map(h, z, eps, nullptr, nullptr);
}

OrbitResult locate_periodic_orbit(const PoincareMapHandle& h,
                                  const VectorXd& seed, double eps) {
  if (eps < 1e-6)
    throw DegenerateEpsilonError(
        "eps below 1e-6: every point is near-fixed and the orbit search is "
        "degenerate");
  const int n = h.sys.dim;
  VectorXd z = seed;
  MatrixXd M(n, n);
  double trace_int = 0.0;
  for (int it = 0; it <= 30; ++it) {
    VectorXd image = run_map(h, z, eps, &M, &trace_int);
    VectorXd res = image - z;
    if (res.lpNorm<Eigen::Infinity>() <= 1e-10) {
      OrbitResult out;
      out.fixed_point = z;
      out.monodromy = M;
      out.multipliers = Eigen::EigenSolver<MatrixXd>(M).eigenvalues();
      out.iterations = it;
      out.residual = res.lpNorm<Eigen::Infinity>();
      double det = M.determinant();
      out.liouville_defect =
          std::abs(det - std::exp(trace_int)) / std::max(1.0, std::abs(det));
      return out;
    }
    MatrixXd G = M - MatrixXd::Identity(n, n);
    Eigen::FullPivLU<MatrixXd> lu(G);
    if (!lu.isInvertible()) {
      Eigen::JacobiSVD<MatrixXd> svd(G);
      std::ostringstream os;
      os << "near-singular Newton matrix, condition number "
         << svd.singularValues()(0) /
                std::max(svd.singularValues().minCoeff(), 1e-300);
      throw OrbitNotFound(os.str());
    }
    z += lu.solve(-res);
  }
  throw OrbitNotFound("Newton on the Poincaré map did not reach 1e-10 in 30 "
                      "iterations");
}

namespace {

// Contract all but the first input slot of an order-k tensor with the
// given vectors, leaving the Jacobian-like matrix.
MatrixXd contract_tail(const averaging::DTensor& T,
                       std::span<const VectorXd> args) {
  int n = T.n_in();
  MatrixXd out = MatrixXd::Zero(T.n_out(), n);
  std::vector<int> idx(static_cast<std::size_t>(T.order()), 0);
  for (int c = 0; c < T.n_out(); ++c)
    for (int j = 0; j < n; ++j) {
      idx[0] = j;
      // iterate over the remaining slots
      double acc = 0.0;
      int extra = T.order() - 1;
      std::vector<int> pos(static_cast<std::size_t>(extra), 0);
      while (true) {
        double w = 1.0;
        for (int s = 0; s < extra; ++s) {
          idx[static_cast<std::size_t>(s) + 1] = pos[static_cast<std::size_t>(s)];
          w *= args[static_cast<std::size_t>(s)](pos[static_cast<std::size_t>(s)]);
        }
        acc += w * T.at(c, idx);
        int s = extra - 1;
        for (; s >= 0; --s) {
          if (++pos[static_cast<std::size_t>(s)] < n) break;
          pos[static_cast<std::size_t>(s)] = 0;
        }
        if (s < 0) break;
      }
      out(c, j) = acc;
    }
  return out;
}

}  // namespace

std::array<MatrixXd, 3> a_matrices(const AveragedSet& av, const VectorXd& z0,
                                   const VectorXd& z1, const VectorXd& z2) {
  std::vector<VectorXd> a1{z1};
  std::vector<VectorXd> a11{z1, z1};
  std::vector<VectorXd> a2{z2};

  MatrixXd A0 = av.g_derivatives(z0, 1, 1).matrix();
  MatrixXd A1 =
      contract_tail(av.g_derivatives(z0, 1, 2), a1) +
      av.g_derivatives(z0, 2, 1).matrix();
  MatrixXd A2 = contract_tail(av.g_derivatives(z0, 1, 2), a2) +
                0.5 * contract_tail(av.g_derivatives(z0, 1, 3), a11) +
                contract_tail(av.g_derivatives(z0, 2, 2), a1) +
                av.g_derivatives(z0, 3, 1).matrix();
  return {A0, A1, A2};
}

RouthHurwitz routh_hurwitz_2(double p, double q) {
  if (std::abs(p) <= 1e-12 || std::abs(q) <= 1e-12)
    return RouthHurwitz::Marginal;
  return (p > 0.0 && q > 0.0) ? RouthHurwitz::Stable : RouthHurwitz::Unstable;
}

Ladder k_determined_ladder(const MatrixXd& A0, const MatrixXd& A1,
                           const MatrixXd& A2, double floor) {
  if (A0.rows() != 2 || A0.cols() != 2 || A1.rows() != 2 || A2.rows() != 2)
    throw UnsupportedShape("eigenvalue laddering supports 2x2 matrices only");
  if (std::abs(A0(0, 0)) > floor || std::abs(A0(0, 1)) > floor ||
      std::abs(A0(1, 0)) > floor)
    throw UnsupportedShape(
        "leading matrix is not of the shape diag(0, mu) required by the "
        "bundled regime");
  const double mu = A0(1, 1);
  if (std::abs(mu) < floor)
    throw UnsupportedShape("leading matrix has no nonzero diagonal entry");

  // Polynomial (eps-jet) similarity transform, truncation at eps^2.
  auto spec = systems::offset_spec(1, 2);
  Jet eps = Jet::variable(spec, 0, 0.0);
  auto J = [&](double v) { return Jet::constant(spec, v); };

  Jet T12 = eps * (-A1(0, 1) / mu) +
            eps * eps * ((A1(0, 1) * A1(1, 1) - mu * A2(0, 1)) / (mu * mu));
  Jet T21 = eps * (A1(1, 0) / mu) +
            eps * eps * ((-A1(1, 0) * A1(1, 1) + mu * A2(1, 0)) / (mu * mu));

  std::array<std::array<Jet, 2>, 2> A, T, Ti, C;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      A[r][c] = J(A0(r, c)) + eps * A1(r, c) + eps * eps * A2(r, c);
  T = {{{J(1.0), T12}, {T21, J(1.0)}}};
  Jet invdet = jets::reciprocal(J(1.0) - T12 * T21);
  Ti = {{{invdet, -T12 * invdet}, {-T21 * invdet, invdet}}};

  auto matmul = [&](const auto& X, const auto& Y) {
    std::array<std::array<Jet, 2>, 2> R;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        R[r][c] = X[r][0] * Y[0][c] + X[r][1] * Y[1][c];
    return R;
  };
  C = matmul(matmul(T, A), Ti);

  auto coeffs = [&](const Jet& j) {
    std::array<double, 3> out{};
    for (int k = 0; k < 3; ++k) {
      std::array<int, 1> m{k};
      out[static_cast<std::size_t>(k)] = j.coeff(m);
    }
    return out;
  };

  Ladder lad;
  lad.diag_slow = coeffs(C[0][0]);
  lad.diag_fast = coeffs(C[1][1]);
  auto off0 = coeffs(C[0][1]);
  auto off1 = coeffs(C[1][0]);
  for (int k = 0; k < 3; ++k)
    lad.offdiag_defect = std::max(
        {lad.offdiag_defect, std::abs(off0[static_cast<std::size_t>(k)]),
         std::abs(off1[static_cast<std::size_t>(k)])});

  lad.fast = {1, mu};
  if (std::abs(lad.diag_slow[1]) >= floor)
    lad.slow = {2, lad.diag_slow[1]};
  else if (std::abs(lad.diag_slow[2]) >= floor)
    lad.slow = {3, lad.diag_slow[2]};
  else
    lad.slow = {0, 0.0};
  return lad;
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::AsymptoticallyStable: return "asymptotically stable";
    case Classification::Unstable: return "unstable";
    case Classification::UnstableCylinders:
      return "unstable (stable/unstable manifolds are topological cylinders)";
    case Classification::UnstableDim3:
      return "unstable (unstable manifold of dimension 3)";
    case Classification::Undetermined: return "undetermined";
  }
  return "undetermined";
}

Classification classify_ladder(const Ladder& ladder, double floor) {
  if (ladder.slow.rate == 0 || std::abs(ladder.fast.coeff) < floor ||
      std::abs(ladder.slow.coeff) < floor)
    return Classification::Undetermined;
  double c1 = ladder.fast.coeff, c2 = ladder.slow.coeff;
  if (c1 < 0.0 && c2 < 0.0) return Classification::AsymptoticallyStable;
  if (c1 * c2 < 0.0) return Classification::UnstableCylinders;
  return Classification::UnstableDim3;
}

Classification classify_routh_hurwitz(double p, double q) {
  switch (routh_hurwitz_2(p, q)) {
    case RouthHurwitz::Stable: return Classification::AsymptoticallyStable;
    case RouthHurwitz::Unstable: return Classification::Unstable;
    case RouthHurwitz::Marginal: return Classification::Undetermined;
  }
  return Classification::Undetermined;
}

Crossing next_crossing(const Field3& f, const SpatialSection& section,
                       const Eigen::Vector3d& start, double max_time,
                       double rel_tol, double abs_tol) {
  using Arr = std::array<double, 3>;
  auto rhs = [&](const Arr& x, Arr& dxdt, double) {
    Eigen::Vector3d v = f(Eigen::Vector3d(x[0], x[1], x[2]));
    dxdt = {v(0), v(1), v(2)};
  };
  auto surf = [&](const Arr& x) {
    return section.normal(0) * x[0] + section.normal(1) * x[1] +
           section.normal(2) * x[2] - section.offset;
  };
  auto speed_at = [&](const Arr& x) {
    Eigen::Vector3d v = f(Eigen::Vector3d(x[0], x[1], x[2]));
    return section.normal.dot(v);
  };

  auto stepper = odeint::make_dense_output(
      abs_tol, rel_tol, odeint::runge_kutta_dopri5<Arr>());
  Arr x = {start(0), start(1), start(2)};
  stepper.initialize(x, 0.0, 1e-3);

  double s_prev = surf(x);
  bool armed = std::abs(s_prev) > 1e-9;
  while (stepper.current_time() < max_time) {
    stepper.do_step(rhs);
    for (double v : stepper.current_state())
      if (!std::isfinite(v))
        throw EscapeError("trajectory blew up before reaching the section");
    double s_cur = surf(stepper.current_state());
    double t_lo = stepper.previous_time();
    double t_hi = stepper.current_time();
    if (armed && s_prev * s_cur <= 0.0 && s_prev != s_cur) {
      // Newton on the event time over the dense output.
      double t = t_lo + (t_hi - t_lo) * s_prev / (s_prev - s_cur);
      Arr xt{};
      double st = 0.0, sp = 0.0;
      for (int it = 0; it < 60; ++it) {
        stepper.calc_state(t, xt);
        st = surf(xt);
        if (std::abs(st) <= section.crossing_tol) break;
        sp = speed_at(xt);
        if (std::abs(sp) < 1e-14) break;
        t = std::clamp(t - st / sp, t_lo, t_hi);
      }
      sp = speed_at(xt);
      if (std::abs(st) <= section.crossing_tol) {
        if (std::abs(sp) < section.transversality_floor)
          throw SectionError("crossing is not transversal");
        if (sp * section.direction > 0.0)
          return {Eigen::Vector3d(xt[0], xt[1], xt[2]), t, sp};
        // wrong direction: keep integrating
      }
    }
    if (!armed && std::abs(s_cur) > 1e-9) armed = true;
    s_prev = s_cur;
  }
  throw SectionError("no transversal crossing before the time limit");
}

}  // namespace zerohopf::stability
