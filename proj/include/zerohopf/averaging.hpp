#pragma once

// Averaged functions g_i(z) = y_i(T,z)/i!, i = 1..5, of a standard-form
// system, together with their state-derivative tensors.  The y_i are the
// integro-differential recursion integrated as one coupled ODE pass; all
// Frechet-derivative terms are carried as state-offset jets, so the same
// pass yields D^k g_i (exact under the grading i + k ≤ 5).
//
// poincare_expansion_oracle is the independent check: it integrates the
// full, un-expanded system at finite ε and fits the ε-polynomial of the
// displacement map.

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "zerohopf/systems.hpp"

namespace zerohopf::averaging {

using jets::Jet;
using systems::StandardFormSystem;

struct QuadratureFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct QuadratureSpec {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  // oracle fit: symmetric ε nodes ±h0·ratio^j, j = 0..ladder-1, plus ε = 0
  double oracle_h0 = 0.2;
  double oracle_ratio = 0.8;
  int oracle_ladder = 10;
  double oracle_rel_tol = 1e-13;
  double oracle_abs_tol = 1e-14;
};

/// Order-k symmetric derivative tensor of a vector-valued map on R^n,
/// derivative convention.  Layout [component][i1]..[ik], dense.
class DTensor {
 public:
  DTensor() = default;
  DTensor(int n_in, int n_out, int order);

  int n_in() const { return n_in_; }
  int n_out() const { return n_out_; }
  int order() const { return order_; }

  double& at(int comp, std::span<const int> idx);
  double at(int comp, std::span<const int> idx) const;
  double& at(int comp, std::initializer_list<int> idx) {
    return at(comp, std::span<const int>(idx.begin(), idx.size()));
  }
  double at(int comp, std::initializer_list<int> idx) const {
    return const_cast<DTensor*>(this)->at(comp, std::span<const int>(idx.begin(), idx.size()));
  }

  /// Contract all `order` slots with the given vectors.
  Eigen::VectorXd apply(std::span<const Eigen::VectorXd> args) const;
  /// Jacobian view (order must be 1).
  Eigen::MatrixXd matrix() const;
  Eigen::VectorXd vector() const;  // order 0

 private:
  int n_in_ = 0, n_out_ = 0, order_ = 0;
  std::vector<double> data_;
};

class AveragedSet {
 public:
  explicit AveragedSet(StandardFormSystem sys, QuadratureSpec quad = {});

  const StandardFormSystem& system() const { return *sys_; }
  const QuadratureSpec& quadrature() const { return quad_; }

  /// y_i(t, z) of the recursion, 1 ≤ i ≤ 5.
  Eigen::VectorXd y(double t, const Eigen::VectorXd& z, int i) const;

  /// g_i(z) = y_i(T, z)/i!.
  Eigen::VectorXd g(const Eigen::VectorXd& z, int i) const;

  /// D^k g_i(z); requires i + k ≤ 5 (grading limit of one expansion pass).
  DTensor g_derivatives(const Eigen::VectorXd& z, int i, int k) const;

  /// Fits ĝ_1..ĝ_5 from full-system period maps at the given ε nodes
  /// (symmetric default ladder when empty).
  std::vector<Eigen::VectorXd> poincare_expansion_oracle(
      const Eigen::VectorXd& z, std::vector<double> eps_nodes = {}) const;

  /// Full-system displacement map Π(z) − z at finite ε.
  Eigen::VectorXd displacement(const Eigen::VectorXd& z, double eps) const;

 private:
  struct Cache;
  // A pass carrying offset jets of degree d yields D^k y_i exactly for
  // (i-1)+k ≤ d; callers pick the cheapest sufficient degree.
  const std::vector<std::vector<Jet>>& y_jets_at_period(const Eigen::VectorXd& z,
                                                        int state_deg) const;
  std::vector<std::vector<Jet>> integrate_recursion(double t, const Eigen::VectorXd& z,
                                                    int state_deg) const;

  std::shared_ptr<const StandardFormSystem> sys_;
  QuadratureSpec quad_;
  std::shared_ptr<Cache> cache_;
};

}  // namespace zerohopf::averaging
