#pragma once

// Branch machinery on a zero manifold of the first averaged function:
// block decomposition of Dg1 under an (a,b) coordinate split, the
// correction functions c_1..c_4 and bifurcation functions f_1..f_4 of the
// reduced problem, simple-zero detection of f_l, and the eps-series of the
// periodic orbit's initial condition.
//
// Normalization: the c_i are defined so that the slaved coordinate of the
// branch is b(eps) = B(u) + sum_i eps^i c_i(u)/i!; with that convention the
// perpendicular equations cancel through order eps^5 (see the elimination
// identity exercised in the tests).

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "zerohopf/averaging.hpp"

namespace zerohopf::lyapschmidt {

using averaging::AveragedSet;

struct ChartError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BranchDegeneracy : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroSearchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A chart Z = {(u, B(u))} of a manifold of zeros of g1.  The first m
/// coordinates are the free block u, the last n-m the slaved block b.
struct BranchChart {
  int m = 1;
  /// u -> b on the manifold; a null function means B == 0 (flat chart).
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> B;
  Eigen::VectorXd u_min, u_max;  // box, size m
  double delta_floor = 1e-8;     // min singular value demanded of Delta_u
};

/// The four blocks of Dg1(z_u) under the (a,b) split.
struct Blocks {
  Eigen::MatrixXd Lambda;  // d_a of the first m components
  Eigen::MatrixXd Gamma;   // d_b of the first m components
  Eigen::MatrixXd Bu;      // d_a of the last n-m components
  Eigen::MatrixXd Delta;   // d_b of the last n-m components
};

/// z_u = (u, B(u)).
Eigen::VectorXd chart_point(const AveragedSet& av, const BranchChart& chart,
                            const Eigen::VectorXd& u);

Blocks block_decompose(const AveragedSet& av, const BranchChart& chart,
                       const Eigen::VectorXd& u);

/// Checks |g1(z_u)| <= tol on a grid of the chart box and that Delta_u
/// stays invertible; throws ChartError / BranchDegeneracy otherwise.
void verify_chart(const AveragedSet& av, const BranchChart& chart,
                  int grid_points = 100, double tol = 1e-9);

/// Correction function c_i(u), 1 <= i <= 4 (an (n-m)-vector).
Eigen::VectorXd correction_c(const AveragedSet& av, const BranchChart& chart,
                             const Eigen::VectorXd& u, int order);

/// Bifurcation function f_i(u), 1 <= i <= 4 (an m-vector).
Eigen::VectorXd bifurcation_f(const AveragedSet& av, const BranchChart& chart,
                              const Eigen::VectorXd& u, int order);

struct BifurcationReport {
  int l = 0;                  // order at which the nondegenerate zero lives
  Eigen::VectorXd u_star;
  double residual = 0.0;      // |f_l(u_star)|
  double det_Dfl = 0.0;
  std::vector<Eigen::VectorXd> f_values;  // f_1..f_4 at u_star
  std::vector<Eigen::VectorXd> c_values;  // c_1..c_4 at u_star
  bool has_z_series = false;  // filled when l == 2
  Eigen::VectorXd z0, z1, z2;
};

/// Verifies f_i == 0 for i < l on a grid, then locates a simple zero of
/// f_l in (lo, hi] by sign scan + Newton.  Currently m = 1 only.
BifurcationReport find_simple_zero(const AveragedSet& av,
                                   const BranchChart& chart, int l,
                                   double lo = 0.0, double hi = 100.0);

/// Fills z0, z1, z2 of the report (requires l == 2; uses f_3, f_4 and the
/// u-derivatives of f_2, f_3 by Richardson-extrapolated differences).
void z_series(const AveragedSet& av, const BranchChart& chart,
              BifurcationReport& report);

}  // namespace zerohopf::lyapschmidt
