#pragma once

// The Rössler vector field, its two zero-Hopf parameter families, and the
// exact coordinate changes turning them into 2π-periodic standard-form
// systems in (r, z) with the rotation angle as independent variable.
//
// All three evaluation paths (ε-jet, plain numeric, fixed-ε variational)
// run the same composition of exact transformations; nothing is
// hand-expanded.

#include <array>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "zerohopf/jets.hpp"

namespace zerohopf::systems {

using jets::Jet;
using jets::SpecPtr;

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ReparameterizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RosslerParams {
  double a = 0.0, b = 0.0, c = 0.0;
};

template <class T>
std::array<T, 3> rossler_rhs(const T& a, const T& b, const T& c,
                             const std::array<T, 3>& s) {
  const T& x = s[0];
  const T& y = s[1];
  const T& z = s[2];
  return {-y - z, x + a * y, b * x - c * z + x * z};
}

inline std::array<double, 3> rossler_rhs(const RosslerParams& p,
                                         const std::array<double, 3>& s) {
  return rossler_rhs<double>(p.a, p.b, p.c, s);
}

/// (a,b,c) = (ā+εα, 1+εβ, ā+εγ), ā ∈ (−√2, √2) \ {0}.
struct CaseAFamily {
  double abar = 1.0;
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  double eps = 0.0;
  void validate() const;
};

/// (a,b,c) = (α(ε), ω²−1+β(ε), γ(ε)) with degree-5 polynomials in ε.
struct CaseBFamily {
  double omega = 1.5;
  std::array<double, 5> alpha{}, beta{}, gamma{};  // coefficients of ε..ε⁵
  double eps = 0.0;
  double resonance_guard = 1e-6;  // min distance of ω from {1, √2}
  void validate() const;
};

struct DomainBox {
  std::vector<std::array<double, 2>> bounds;
  bool contains(std::span<const double> p) const {
    for (std::size_t i = 0; i < bounds.size(); ++i)
      if (p[i] < bounds[i][0] || p[i] > bounds[i][1]) return false;
    return true;
  }
};

/// Jet spec used for ε-expansion: variable 0 is ε (cap 6), variables
/// 1..n_state are state offsets.  With the default total cap 6,
/// coefficients are exact for eps_degree + state_degree ≤ 5 (one ε order
/// is consumed by the scaling (X̄,Ȳ,Z̄) = ε(X,Y,Z)); raise the cap for
/// full exactness at higher mixed orders.
SpecPtr expansion_spec(int n_state, int state_deg, int total_cap = 6);

/// State-offset-only spec at fixed ε (variational evaluations).
SpecPtr offset_spec(int n_state, int state_deg);

/// Variable jet when the cap admits degree 1, plain constant otherwise
/// (degree-0 state evaluations).
inline Jet state_jet(const SpecPtr& spec, int var, double base_value) {
  return spec->per_var_caps()[var] >= 1 ? Jet::variable(spec, var, base_value)
                                        : Jet::constant(spec, base_value);
}

/// A T-periodic system ẋ = Σ εⁱ F_i(t,x) + O(ε⁶) with trivial unperturbed
/// flow, presented as exact right-hand-side evaluators.
struct StandardFormSystem {
  int dim = 0;
  double period = 0.0;
  DomainBox omega;

  /// ε-jet evaluation at base state; returns `dim` jets over
  /// expansion_spec(dim, state_deg, total_cap).
  std::function<std::vector<Jet>(double t, std::span<const double> state,
                                 int state_deg, int total_cap)>
      jet_rhs;

  /// Plain numeric right-hand side at a fixed ε (returns zeros at ε = 0).
  std::function<std::vector<double>(double t, std::span<const double> state,
                                    double eps)>
      numeric_rhs;

  /// State-offset jets at fixed ε, for variational equations; returns jets
  /// over offset_spec(dim, state_deg).
  std::function<std::vector<Jet>(double t, std::span<const double> state,
                                 double eps, int state_deg)>
      variational_rhs;

  /// dθ/dt of the underlying flow (case systems only; null otherwise).
  std::function<double(double t, std::span<const double> state, double eps)>
      thetadot;

  /// Rotation rate of the unperturbed flow (√(2−ā²) or ω for the bundled
  /// cases; 0 if not applicable).
  double base_rotation_rate = 0.0;
};

StandardFormSystem case_a_standard_form(const CaseAFamily& f);
StandardFormSystem case_b_standard_form(const CaseBFamily& f);

/// Map a transformed section state (r, z) at angle θ back to the original
/// Rössler coordinates (x, y, z) at the given ε.
std::array<double, 3> case_a_to_rossler(const CaseAFamily& f, double theta,
                                        double r, double z);
std::array<double, 3> case_b_to_rossler(const CaseBFamily& f, double theta,
                                        double r, double z);

/// F_i(t,z) together with its state-derivative tensors up to state_order,
/// all extracted from one jet evaluation.  Tensor (i, l) is stored dense as
/// [component][j1][j2]..[jl] with derivative-convention scaling.
struct TensorBundle {
  int dim = 0;
  int eps_order = 0;
  int state_order = 0;
  // tensors[i-1][l], flat size dim * dim^l
  std::vector<std::vector<std::vector<double>>> tensors;

  std::span<const double> tensor(int eps_i, int l) const {
    return tensors.at(eps_i - 1).at(l);
  }
  std::vector<double> value(int eps_i) const { return tensors.at(eps_i - 1).at(0); }
};

TensorBundle eps_taylor_coeffs(const StandardFormSystem& s, double t,
                               std::span<const double> z, int eps_order,
                               int state_order);

}  // namespace zerohopf::systems
