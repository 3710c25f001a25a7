#include "zerohopf/systems.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace zerohopf::systems {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kSqrt2 = 1.4142135623730951;

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 invert(const Mat3& m) {
  Eigen::Matrix3d em;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) em(i, j) = m[i][j];
  Eigen::Matrix3d inv = em.inverse();
  Mat3 out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[i][j] = inv(i, j);
  return out;
}

// (x,y,z) = L_A · (X̄,Ȳ,Z̄): conjugates the zero-Hopf linearization at
// (a,b,c)=(ā,1,ā) to rotation ⊕ 0 with rate √(2−ā²).
Mat3 case_a_matrix(double abar) {
  const double s = std::sqrt(2.0 - abar * abar);
  return {{{1.0, -abar / s, 1.0},
           {0.0, 1.0 / s, -1.0 / abar},
           {abar, -(abar * abar - 1.0) / s, 1.0 / abar}}};
}

// (x,y,z) = L_B · (X̄,Ȳ,Z̄) for (a,b,c)=(0, ω²−1, 0); rotation rate ω.
Mat3 case_b_matrix(double omega) {
  return {{{1.0, 0.0, 0.0},
           {0.0, 1.0 / omega, 1.0},
           {0.0, omega - 1.0 / omega, -1.0}}};
}

template <class T>
T make_const(const T& proto, double v);

template <>
double make_const<double>(const double&, double v) { return v; }

template <>
Jet make_const<Jet>(const Jet& proto, double v) {
  return Jet::constant(proto.spec(), v);
}

// Exact chain rule for the cylindrical reparameterization, shared by all
// scalar types.  z_times_r selects the Case A chart Z = r·z.
template <class T, class DivEps>
std::array<T, 2> transformed_rhs(const Mat3& L, const Mat3& Linv,
                                 bool z_times_r, const std::array<T, 3>& abc,
                                 double theta, const T& r, const T& z,
                                 const T& eps, DivEps div_eps,
                                 T* thetadot_out = nullptr) {
  const double ct = std::cos(theta), st = std::sin(theta);
  T X = r * ct;
  T Y = r * st;
  T Z = z_times_r ? r * z : z;

  T bx = eps * X, by = eps * Y, bz = eps * Z;
  std::array<T, 3> xyz = {L[0][0] * bx + L[0][1] * by + L[0][2] * bz,
                          L[1][0] * bx + L[1][1] * by + L[1][2] * bz,
                          L[2][0] * bx + L[2][1] * by + L[2][2] * bz};
  std::array<T, 3> f = rossler_rhs(abc[0], abc[1], abc[2], xyz);

  std::array<T, 3> d = {
      div_eps(Linv[0][0] * f[0] + Linv[0][1] * f[1] + Linv[0][2] * f[2]),
      div_eps(Linv[1][0] * f[0] + Linv[1][1] * f[1] + Linv[1][2] * f[2]),
      div_eps(Linv[2][0] * f[0] + Linv[2][1] * f[1] + Linv[2][2] * f[2])};

  T rdot = (X * d[0] + Y * d[1]) / r;
  T thdot = (X * d[1] - Y * d[0]) / (r * r);
  T zdot = z_times_r ? (d[2] - z * rdot) / r : d[2];
  if (thetadot_out) *thetadot_out = thdot;
  return {rdot / thdot, zdot / thdot};
}

DomainBox default_box() {
  return DomainBox{{{1e-3, 100.0}, {-100.0, 100.0}}};
}

void check_domain(const DomainBox& box, std::span<const double> state) {
  if (!box.contains(state))
    throw DomainError("state outside the configured domain box");
}

}  // namespace

void CaseAFamily::validate() const {
  if (abar == 0.0 || abar * abar >= 2.0)
    throw std::invalid_argument(
        "CaseAFamily: abar must lie in (-sqrt 2, sqrt 2) \\ {0}");
  if (eps < 0.0) throw std::invalid_argument("CaseAFamily: eps must be >= 0");
}

void CaseBFamily::validate() const {
  if (omega <= 0.0) throw std::invalid_argument("CaseBFamily: omega must be > 0");
  if (std::abs(omega - 1.0) < resonance_guard ||
      std::abs(omega - kSqrt2) < resonance_guard)
    throw std::invalid_argument("CaseBFamily: omega too close to 1 or sqrt 2");
  if (eps < 0.0) throw std::invalid_argument("CaseBFamily: eps must be >= 0");
}

SpecPtr expansion_spec(int n_state, int state_deg, int total_cap) {
  std::vector<int> caps(1 + n_state, state_deg);
  caps[0] = 6;
  return jets::JetSpec::make(std::move(caps), total_cap);
}

SpecPtr offset_spec(int n_state, int state_deg) {
  return jets::JetSpec::make(std::vector<int>(n_state, state_deg), state_deg);
}

namespace {

// Shared construction of the two case systems; abc_of(eps) yields the
// parameter curve for any scalar type.
template <class MakeParams>
StandardFormSystem make_case_system(const Mat3& L, bool z_times_r,
                                    double rotation_rate,
                                    MakeParams make_params) {
  const Mat3 Linv = invert(L);
  StandardFormSystem sys;
  sys.dim = 2;
  sys.period = kTwoPi;
  sys.omega = default_box();
  sys.base_rotation_rate = rotation_rate;

  sys.jet_rhs = [=, box = sys.omega](double t, std::span<const double> state,
                                     int state_deg, int total_cap) {
    check_domain(box, state);
    SpecPtr spec = expansion_spec(2, state_deg, total_cap);
    Jet eps = Jet::variable(spec, 0, 0.0);
    Jet r = state_jet(spec, 1, state[0]);
    Jet z = state_jet(spec, 2, state[1]);
    std::array<Jet, 3> abc = make_params(eps);
    auto out = transformed_rhs<Jet>(L, Linv, z_times_r, abc, t, r, z, eps,
                                    [](const Jet& v) { return v.shift_down(0); });
    return std::vector<Jet>{out[0], out[1]};
  };

  sys.numeric_rhs = [=, box = sys.omega](double t, std::span<const double> state,
                                         double eps) {
    check_domain(box, state);
    if (eps == 0.0) return std::vector<double>{0.0, 0.0};
    std::array<double, 3> abc = make_params(eps);
    auto out = transformed_rhs<double>(L, Linv, z_times_r, abc, t, state[0],
                                       state[1], eps,
                                       [eps](double v) { return v / eps; });
    return std::vector<double>{out[0], out[1]};
  };

  sys.variational_rhs = [=, box = sys.omega](double t,
                                             std::span<const double> state,
                                             double eps, int state_deg) {
    check_domain(box, state);
    SpecPtr spec = offset_spec(2, state_deg);
    if (eps == 0.0)
      return std::vector<Jet>{Jet(spec), Jet(spec)};
    Jet r = state_jet(spec, 0, state[0]);
    Jet z = state_jet(spec, 1, state[1]);
    Jet jeps = Jet::constant(spec, eps);
    std::array<double, 3> abcd = make_params(eps);
    std::array<Jet, 3> abc = {Jet::constant(spec, abcd[0]),
                              Jet::constant(spec, abcd[1]),
                              Jet::constant(spec, abcd[2])};
    const double inv_eps = 1.0 / eps;
    auto out = transformed_rhs<Jet>(L, Linv, z_times_r, abc, t, r, z, jeps,
                                    [inv_eps](const Jet& v) { return v * inv_eps; });
    return std::vector<Jet>{out[0], out[1]};
  };

  sys.thetadot = [=, box = sys.omega](double t, std::span<const double> state,
                                      double eps) {
    check_domain(box, state);
    if (eps == 0.0) return rotation_rate;
    std::array<double, 3> abc = make_params(eps);
    double thdot = 0.0;
    transformed_rhs<double>(L, Linv, z_times_r, abc, t, state[0], state[1], eps,
                            [eps](double v) { return v / eps; }, &thdot);
    return thdot;
  };

  return sys;
}

}  // namespace

StandardFormSystem case_a_standard_form(const CaseAFamily& f) {
  f.validate();
  const double abar = f.abar, al = f.alpha, be = f.beta, ga = f.gamma;
  auto params = [abar, al, be, ga](const auto& eps) {
    using T = std::decay_t<decltype(eps)>;
    return std::array<T, 3>{abar + eps * al, 1.0 + eps * be, abar + eps * ga};
  };
  return make_case_system(case_a_matrix(abar), /*z_times_r=*/true,
                          std::sqrt(2.0 - abar * abar), params);
}

StandardFormSystem case_b_standard_form(const CaseBFamily& f) {
  f.validate();
  const double om = f.omega;
  const auto ac = f.alpha, bc = f.beta, gc = f.gamma;
  const double b0 = om * om - 1.0;
  auto params = [ac, bc, gc, b0](const auto& eps) {
    using T = std::decay_t<decltype(eps)>;
    // Horner over the degree-5 coefficient polynomials
    T a = make_const(eps, 0.0), b = make_const(eps, 0.0),
      c = make_const(eps, 0.0);
    for (int i = 4; i >= 0; --i) {
      a = a * eps + ac[i];
      b = b * eps + bc[i];
      c = c * eps + gc[i];
    }
    return std::array<T, 3>{a * eps, b0 + b * eps, c * eps};
  };
  return make_case_system(case_b_matrix(om), /*z_times_r=*/false, om, params);
}

namespace {
std::array<double, 3> to_rossler(const Mat3& L, double eps, double X, double Y,
                                 double Z) {
  std::array<double, 3> b = {eps * X, eps * Y, eps * Z};
  return {L[0][0] * b[0] + L[0][1] * b[1] + L[0][2] * b[2],
          L[1][0] * b[0] + L[1][1] * b[1] + L[1][2] * b[2],
          L[2][0] * b[0] + L[2][1] * b[1] + L[2][2] * b[2]};
}
}  // namespace

std::array<double, 3> case_a_to_rossler(const CaseAFamily& f, double theta,
                                        double r, double z) {
  return to_rossler(case_a_matrix(f.abar), f.eps, r * std::cos(theta),
                    r * std::sin(theta), r * z);
}

std::array<double, 3> case_b_to_rossler(const CaseBFamily& f, double theta,
                                        double r, double z) {
  return to_rossler(case_b_matrix(f.omega), f.eps, r * std::cos(theta),
                    r * std::sin(theta), z);
}

TensorBundle eps_taylor_coeffs(const StandardFormSystem& s, double t,
                               std::span<const double> z, int eps_order,
                               int state_order) {
  if (eps_order < 1 || eps_order > 5)
    throw std::invalid_argument("eps_taylor_coeffs: eps_order in 1..5");
  if (state_order < 0 || state_order > 4)
    throw std::invalid_argument("eps_taylor_coeffs: state_order in 0..4");
  if (!s.omega.bounds.empty() && !s.omega.contains(z))
    throw DomainError("eps_taylor_coeffs: state outside the domain box");

  const int total_cap = eps_order + state_order + 1;
  std::vector<Jet> jets = s.jet_rhs(t, z, state_order, total_cap);
  const int n = s.dim;

  TensorBundle out;
  out.dim = n;
  out.eps_order = eps_order;
  out.state_order = state_order;
  out.tensors.resize(eps_order);

  std::vector<int> m(1 + n);
  for (int i = 1; i <= eps_order; ++i) {
    auto& per_order = out.tensors[i - 1];
    per_order.resize(state_order + 1);
    for (int l = 0; l <= state_order; ++l) {
      std::size_t block = 1;
      for (int q = 0; q < l; ++q) block *= n;
      const std::size_t sz = block * n;
      auto& flat = per_order[l];
      flat.assign(sz, 0.0);
      std::vector<int> idx(l, 0);
      for (std::size_t pos = 0; pos < sz; ++pos) {
        const int comp = static_cast<int>(pos / block);
        std::size_t rem = pos % block;
        for (int q = l - 1; q >= 0; --q) {
          idx[q] = static_cast<int>(rem % n);
          rem /= n;
        }
        std::fill(m.begin(), m.end(), 0);
        m[0] = i;
        for (int q = 0; q < l; ++q) m[1 + idx[q]] += 1;
        double fac = 1.0;
        for (int v = 1; v <= n; ++v)
          for (int k = 2; k <= m[v]; ++k) fac *= k;
        flat[pos] = jets[comp].coeff(m) * fac;
      }
    }
  }
  return out;
}

}  // namespace zerohopf::systems
