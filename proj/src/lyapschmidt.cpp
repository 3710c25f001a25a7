#include "zerohopf/lyapschmidt.hpp"

#include <cmath>
#include <map>
#include <utility>

namespace zerohopf::lyapschmidt {

using averaging::DTensor;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd chart_b(const BranchChart& chart, int nb, const VectorXd& u) {
  if (!chart.B) return VectorXd::Zero(nb);
  VectorXd b = chart.B(u);
  if (b.size() != nb) throw ChartError("chart B has wrong codomain dimension");
  return b;
}

// Shared evaluation state at one chart point: the blocks, the derivative
// tensors of the g_i contracted in the b-directions only, and the c_i.
struct Ctx {
  const AveragedSet& av;
  const BranchChart& chart;
  int n, m, nb;
  VectorXd u, zu;
  MatrixXd Gamma;
  Eigen::PartialPivLU<MatrixXd> delta_lu;
  std::map<std::pair<int, int>, DTensor> tensors;
  std::vector<VectorXd> c;  // c_1.. as computed

  Ctx(const AveragedSet& av_, const BranchChart& chart_, const VectorXd& u_)
      : av(av_), chart(chart_), n(av_.system().dim), m(chart_.m), nb(n - m), u(u_) {
    if (u.size() != m) throw ChartError("u has wrong dimension");
    zu = VectorXd(n);
    zu.head(m) = u;
    zu.tail(nb) = chart_b(chart, nb, u);
    Blocks bl = block_decompose(av, chart, u);
    Gamma = bl.Gamma;
    delta_lu.compute(bl.Delta);
    c.reserve(4);  // references into c stay valid across later pushes
  }

  const DTensor& tensor(int i, int k) {
    auto key = std::make_pair(i, k);
    auto it = tensors.find(key);
    if (it == tensors.end())
      it = tensors.emplace(key, av.g_derivatives(zu, i, k)).first;
    return it->second;
  }

  // d^k/db^k of g_i at z_u applied to the given b-vectors (full n-vector).
  VectorXd db(int i, std::initializer_list<const VectorXd*> args) {
    int k = static_cast<int>(args.size());
    if (k == 0) return av.g(zu, i);
    std::vector<VectorXd> emb;
    emb.reserve(k);
    for (const VectorXd* a : args) {
      VectorXd v = VectorXd::Zero(n);
      v.tail(nb) = *a;
      emb.push_back(std::move(v));
    }
    return tensor(i, k).apply(emb);
  }

  VectorXd perp(const VectorXd& v) const { return v.tail(nb); }
  VectorXd par(const VectorXd& v) const { return v.head(m); }

  const VectorXd& correction(int order) {
    while (static_cast<int>(c.size()) < order) compute_next_c();
    return c[order - 1];
  }

  void compute_next_c() {
    int next = static_cast<int>(c.size()) + 1;
    VectorXd rhs;
    switch (next) {
      case 1:
        rhs = perp(db(2, {}));
        break;
      case 2: {
        const VectorXd& c1 = correction(1);
        rhs = perp(db(1, {&c1, &c1})) + 2.0 * perp(db(2, {&c1})) +
              2.0 * perp(db(3, {}));
        break;
      }
      case 3: {
        const VectorXd& c1 = correction(1);
        const VectorXd& c2 = correction(2);
        rhs = perp(db(1, {&c1, &c1, &c1})) + 3.0 * perp(db(1, {&c1, &c2})) +
              3.0 * perp(db(2, {&c1, &c1})) + 3.0 * perp(db(2, {&c2})) +
              6.0 * perp(db(3, {&c1})) + 6.0 * perp(db(4, {}));
        break;
      }
      case 4: {
        const VectorXd& c1 = correction(1);
        const VectorXd& c2 = correction(2);
        const VectorXd& c3 = correction(3);
        rhs = perp(db(1, {&c1, &c1, &c1, &c1})) +
              3.0 * perp(db(1, {&c2, &c2})) + 4.0 * perp(db(1, {&c1, &c3})) +
              6.0 * perp(db(1, {&c1, &c1, &c2})) + 4.0 * perp(db(2, {&c3})) +
              4.0 * perp(db(2, {&c1, &c1, &c1})) +
              12.0 * perp(db(2, {&c1, &c2})) + 12.0 * perp(db(3, {&c2})) +
              12.0 * perp(db(3, {&c1, &c1})) + 24.0 * perp(db(4, {&c1})) +
              24.0 * perp(db(5, {}));
        break;
      }
      default:
        throw std::invalid_argument("correction order must be 1..4");
    }
    c.push_back(-delta_lu.solve(rhs));
  }

  VectorXd bifurcation(int order) {
    switch (order) {
      case 1:
        return Gamma * correction(1) + par(db(2, {}));
      case 2: {
        const VectorXd& c1 = correction(1);
        const VectorXd& c2 = correction(2);
        return 0.5 * Gamma * c2 + 0.5 * par(db(1, {&c1, &c1})) +
               par(db(2, {&c1})) + par(db(3, {}));
      }
      case 3: {
        const VectorXd& c1 = correction(1);
        const VectorXd& c2 = correction(2);
        const VectorXd& c3 = correction(3);
        return Gamma * c3 / 6.0 + par(db(1, {&c1, &c1, &c1})) / 6.0 +
               0.5 * par(db(1, {&c1, &c2})) + 0.5 * par(db(2, {&c1, &c1})) +
               0.5 * par(db(2, {&c2})) + par(db(3, {&c1})) + par(db(4, {}));
      }
      case 4: {
        const VectorXd& c1 = correction(1);
        const VectorXd& c2 = correction(2);
        const VectorXd& c3 = correction(3);
        const VectorXd& c4 = correction(4);
        return Gamma * c4 / 24.0 + par(db(1, {&c1, &c1, &c1, &c1})) / 24.0 +
               0.25 * par(db(1, {&c1, &c1, &c2})) +
               0.125 * par(db(1, {&c2, &c2})) + par(db(1, {&c1, &c3})) / 6.0 +
               par(db(2, {&c1, &c1, &c1})) / 6.0 +
               0.5 * par(db(2, {&c1, &c2})) + par(db(2, {&c3})) / 6.0 +
               0.5 * par(db(3, {&c1, &c1})) + 0.5 * par(db(3, {&c2})) +
               par(db(4, {&c1})) + par(db(5, {}));
      }
      default:
        throw std::invalid_argument("bifurcation order must be 1..4");
    }
  }
};

// Richardson-extrapolated central difference of a vector-valued map of one
// real variable.
template <typename F>
VectorXd central_diff(F&& f, double x, double h) {
  auto d = [&](double step) -> VectorXd {
    return (f(x + step) - f(x - step)) / (2.0 * step);
  };
  return (4.0 * d(h / 2.0) - d(h)) / 3.0;
}

template <typename F>
VectorXd second_diff(F&& f, double x, double h) {
  auto d = [&](double step) -> VectorXd {
    return (f(x + step) - 2.0 * f(x) + f(x - step)) / (step * step);
  };
  return (4.0 * d(h / 2.0) - d(h)) / 3.0;
}

}  // namespace

VectorXd chart_point(const AveragedSet& av, const BranchChart& chart,
                     const VectorXd& u) {
  int n = av.system().dim;
  int nb = n - chart.m;
  if (chart.m <= 0 || nb <= 0) throw ChartError("split must satisfy 0 < m < n");
  VectorXd z(n);
  z.head(chart.m) = u;
  z.tail(nb) = chart_b(chart, nb, u);
  return z;
}

Blocks block_decompose(const AveragedSet& av, const BranchChart& chart,
                       const VectorXd& u) {
  int n = av.system().dim;
  int m = chart.m, nb = n - m;
  VectorXd zu = chart_point(av, chart, u);
  MatrixXd J = av.g_derivatives(zu, 1, 1).matrix();
  Blocks bl;
  bl.Lambda = J.topLeftCorner(m, m);
  bl.Gamma = J.topRightCorner(m, nb);
  bl.Bu = J.bottomLeftCorner(nb, m);
  bl.Delta = J.bottomRightCorner(nb, nb);
  Eigen::JacobiSVD<MatrixXd> svd(bl.Delta);
  if (svd.singularValues().minCoeff() < chart.delta_floor)
    throw BranchDegeneracy("Delta_u is singular at the queried chart point");
  return bl;
}

void verify_chart(const AveragedSet& av, const BranchChart& chart,
                  int grid_points, double tol) {
  if (chart.m != 1)
    throw ChartError("grid verification implemented for m = 1 charts");
  if (chart.u_min.size() != 1 || chart.u_max.size() != 1 ||
      !(chart.u_min(0) < chart.u_max(0)))
    throw ChartError("chart box is empty or missing");
  VectorXd u(1);
  for (int j = 0; j < grid_points; ++j) {
    u(0) = chart.u_min(0) +
           (chart.u_max(0) - chart.u_min(0)) * j / (grid_points - 1.0);
    VectorXd g1 = av.g(chart_point(av, chart, u), 1);
    if (g1.lpNorm<Eigen::Infinity>() > tol)
      throw ChartError("g1 does not vanish on the chart within tolerance");
    block_decompose(av, chart, u);  // throws if Delta_u degenerates
  }
}

VectorXd correction_c(const AveragedSet& av, const BranchChart& chart,
                      const VectorXd& u, int order) {
  Ctx ctx(av, chart, u);
  return ctx.correction(order);
}

VectorXd bifurcation_f(const AveragedSet& av, const BranchChart& chart,
                       const VectorXd& u, int order) {
  Ctx ctx(av, chart, u);
  return ctx.bifurcation(order);
}

BifurcationReport find_simple_zero(const AveragedSet& av,
                                   const BranchChart& chart, int l,
                                   double lo, double hi) {
  if (chart.m != 1)
    throw ZeroSearchError("zero search implemented for m = 1 charts");
  if (l < 1 || l > 4) throw std::invalid_argument("order l must be 1..4");
  verify_chart(av, chart);

  // Lower orders must vanish identically on the chart before f_l means
  // anything.
  double glo = std::max(lo, chart.u_min(0));
  double ghi = std::min(hi, chart.u_max(0));
  if (!(glo < ghi)) throw ZeroSearchError("search box misses the chart box");
  VectorXd u(1);
  for (int i = 1; i < l; ++i) {
    for (int j = 0; j < 40; ++j) {
      u(0) = glo + (ghi - glo) * j / 39.0;
      if (std::abs(bifurcation_f(av, chart, u, i)(0)) > 1e-8)
        throw ZeroSearchError("f_" + std::to_string(i) +
                              " does not vanish on the chart");
    }
  }

  auto fl = [&](double r) {
    VectorXd uu(1);
    uu(0) = r;
    return bifurcation_f(av, chart, uu, l)(0);
  };

  // 64-point sign scan over (lo, hi] intersected with the chart box.
  const int kScan = 64;
  double prev_x = 0.0, prev_f = 0.0;
  bool have_prev = false, bracketed = false;
  double a = 0.0, b = 0.0, fa = 0.0;
  for (int j = 1; j <= kScan; ++j) {
    double x = glo + (ghi - glo) * j / static_cast<double>(kScan);
    double fx = fl(x);
    if (have_prev && prev_f * fx < 0.0) {
      a = prev_x;
      b = x;
      fa = prev_f;
      bracketed = true;
      break;
    }
    prev_x = x;
    prev_f = fx;
    have_prev = true;
  }
  if (!bracketed) throw ZeroSearchError("no sign change of f_l in the box");

  // A few bisection steps to shrink the bracket, then Newton with a
  // Richardson-extrapolated derivative.
  for (int j = 0; j < 8; ++j) {
    double mid = 0.5 * (a + b);
    double fm = fl(mid);
    if (fa * fm <= 0.0)
      b = mid;
    else {
      a = mid;
      fa = fm;
    }
  }
  double x = 0.5 * (a + b);
  double fx = fl(x);
  double dfl = 0.0;
  for (int it = 0; it < 30 && std::abs(fx) > 1e-10; ++it) {
    double h = 1e-4 * (1.0 + std::abs(x));
    auto scalar = [&](double xx) {
      VectorXd v(1);
      v(0) = fl(xx);
      return v;
    };
    dfl = central_diff(scalar, x, h)(0);
    if (std::abs(dfl) < 1e-12)
      throw ZeroSearchError("vanishing derivative during Newton refinement");
    double step = fx / dfl;
    x -= step;
    fx = fl(x);
    if (std::abs(step) < 1e-13 * (1.0 + std::abs(x))) break;
  }
  // Residual floor scaled by the local derivative: near a steep zero the
  // attainable |f| is limited by the rounding of x itself.
  const double f_tol =
      std::max(1e-10, 1e-12 * (1.0 + std::abs(dfl)) * (1.0 + std::abs(x)));
  if (std::abs(fx) > f_tol)
    throw ZeroSearchError("Newton refinement stalled above tolerance");
  {
    auto scalar = [&](double xx) {
      VectorXd v(1);
      v(0) = fl(xx);
      return v;
    };
    dfl = central_diff(scalar, x, 1e-4 * (1.0 + std::abs(x)))(0);
  }
  if (std::abs(dfl) < 1e-8)
    throw ZeroSearchError("zero fails the nondegeneracy bound on det Df_l");

  BifurcationReport rep;
  rep.l = l;
  rep.u_star = VectorXd::Constant(1, x);
  rep.residual = std::abs(fx);
  rep.det_Dfl = dfl;
  Ctx ctx(av, chart, rep.u_star);
  for (int i = 1; i <= 4; ++i) {
    rep.f_values.push_back(ctx.bifurcation(i));
    rep.c_values.push_back(ctx.correction(i));
  }
  if (l == 2) z_series(av, chart, rep);
  return rep;
}

void z_series(const AveragedSet& av, const BranchChart& chart,
              BifurcationReport& rep) {
  if (rep.l != 2)
    throw std::invalid_argument("z-series formulas are for the l = 2 regime");
  if (chart.m != 1)
    throw std::invalid_argument("z-series implemented for m = 1 charts");
  int n = av.system().dim;
  int nb = n - 1;
  double us = rep.u_star(0);
  double h = 1e-3 * (1.0 + std::abs(us));

  auto f_at = [&](int order) {
    return [&, order](double x) {
      VectorXd v(1);
      v(0) = x;
      return bifurcation_f(av, chart, v, order);
    };
  };
  double f3 = rep.f_values[2](0);
  double f4 = rep.f_values[3](0);
  double Df2 = central_diff(f_at(2), us, h)(0);
  double D2f2 = second_diff(f_at(2), us, h)(0);
  double Df3 = central_diff(f_at(3), us, h)(0);
  if (std::abs(Df2) < 1e-12)
    throw BranchDegeneracy("Df_2(u*) is singular; z-series undefined");

  double u1 = -f3 / Df2;
  double u2 = -0.5 * (D2f2 * u1 * u1 + 2.0 * Df3 * u1 + 2.0 * f4) / Df2;

  auto B_at = [&](double x) {
    VectorXd v(1);
    v(0) = x;
    return chart_b(chart, nb, v);
  };
  VectorXd DB = central_diff(B_at, us, h);
  VectorXd D2B = second_diff(B_at, us, h);
  auto c1_at = [&](double x) {
    VectorXd v(1);
    v(0) = x;
    return correction_c(av, chart, v, 1);
  };
  VectorXd Dc1 = central_diff(c1_at, us, h);

  const VectorXd& c1 = rep.c_values[0];
  const VectorXd& c2 = rep.c_values[1];
  VectorXd B1 = DB * u1 + c1;
  VectorXd B2 = 0.5 * D2B * u1 * u1 + DB * u2 + Dc1 * u1 + 0.5 * c2;

  rep.z0 = VectorXd(n);
  rep.z0(0) = us;
  rep.z0.tail(nb) = B_at(us);
  rep.z1 = VectorXd(n);
  rep.z1(0) = u1;
  rep.z1.tail(nb) = B1;
  rep.z2 = VectorXd(n);
  rep.z2(0) = u2;
  rep.z2.tail(nb) = B2;
  rep.has_z_series = true;
}

}  // namespace zerohopf::lyapschmidt
