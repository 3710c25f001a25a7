#pragma once

// Neimark–Sacker machinery on the averaged plane: detection of a purely
// imaginary eigenvalue crossing along an equilibrium curve of the first
// averaged function, linear normalization of its Jacobian to the rotation
// block, the first Lyapunov coefficient of the crossing, direct detection
// of invariant closed curves of a 2-D return map, and the parameter scan
// locating the empirical existence boundary of the bifurcating torus.

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "zerohopf/averaging.hpp"
#include "zerohopf/stability.hpp"

namespace zerohopf::torus {

using averaging::AveragedSet;
using averaging::DTensor;

struct CrossingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NormalizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FixedPointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One-parameter family μ ↦ averaged planar system.
using MuFamily = std::function<AveragedSet(double mu)>;

struct CrossingData {
  std::string parameter_name = "mu";
  double mu0 = 0.0;    // Re λ(μ0) = 0
  double omega0 = 0.0; // Im λ(μ0) > 0
  double d = 0.0;      // d Re λ / dμ at μ0, nonzero
  std::function<Eigen::Vector2d(double mu)> x_mu;  // equilibrium curve
};

/// Tracks the equilibrium curve of g1 by Newton continuation from the seed
/// and bisects Re λ(μ) of Dg1(x_μ; μ) to |Re λ| ≤ 1e-10.  The transversal
/// speed d is a Richardson-extrapolated centered difference with step
/// 1e-4 · (mu_hi − mu_lo).  Enforces |d| ≥ 1e-9, ω0 ≥ 1e-9 and
/// |g1(x_μ)| ≤ 1e-9 along the curve.
CrossingData find_crossing(const MuFamily& family, double mu_lo, double mu_hi,
                           const Eigen::Vector2d& equilibrium_seed,
                           std::string parameter_name = "mu");

/// View of an averaged set under the affine change x = x0 + L y: exposes
/// h_i(y) = L⁻¹ g_i(x0 + L y) and its derivative tensors, obtained by
/// contracting the jet-carried tensors of g_i with L (never refitted).
class NormalizedAveragedSet {
 public:
  NormalizedAveragedSet(AveragedSet av, Eigen::Vector2d x0, Eigen::Matrix2d L);

  Eigen::VectorXd g(const Eigen::VectorXd& y, int i) const;
  DTensor g_derivatives(const Eigen::VectorXd& y, int i, int k) const;

  const AveragedSet& base() const { return av_; }
  const Eigen::Matrix2d& L() const { return L_; }
  const Eigen::Vector2d& x0() const { return x0_; }

  /// Signed rotation rate: the conjugated Jacobian at y = 0 is
  /// ((0, −ω0), (ω0, 0)); ω0 < 0 flags an orientation-reversing L.
  double omega0 = 0.0;
  /// Largest deviation of the conjugated Jacobian from the rotation block.
  double block_defect = 0.0;

 private:
  AveragedSet av_;
  Eigen::Vector2d x0_;
  Eigen::Matrix2d L_, Linv_;
};

/// Computes L from the complex eigenpair of Dg1(x0) (an input already in
/// rotation-block form yields the identity transform); throws
/// NormalizationError on a real or defective spectrum.
NormalizedAveragedSet jordan_normalize(const AveragedSet& av,
                                       const Eigen::Vector2d& x0);

/// Same view under a caller-supplied linear map (e.g. the bundled case
/// study's closed-form normalization).
NormalizedAveragedSet jordan_normalize_with(const AveragedSet& av,
                                            const Eigen::Vector2d& x0,
                                            const Eigen::Matrix2d& L);

/// Closed-form normalizing map of the rotating-family case study:
/// (r, z) = L (u, v) with r = −2β(ā²−2)(āv−2u)/(ā²+4), z = v.
Eigen::Matrix2d case_a_normalizing_map(double abar, double beta);

/// Equilibrium of the rotating-family g1 at the critical parameter
/// γ = α − ā β:  r = |β|√(2(2−ā²)), z = −āβ/r.
Eigen::Vector2d case_a_critical_equilibrium(double abar, double beta);

/// First Lyapunov coefficient of the crossing, evaluated term by term from
/// the 2nd/3rd derivative tensors of the normalized g1 at the fixed point.
/// A signed ω0 keeps the value orientation-invariant.
double lyapunov_l1(const DTensor& d2, const DTensor& d3, double omega0);
double lyapunov_l1(const NormalizedAveragedSet& ns);

// -------- invariant-curve detection on a 2-D return map --------

using Map2 = std::function<Eigen::Vector2d(const Eigen::Vector2d&)>;

struct CurveOptions {
  int iterations = 600;      // total map iterations from the seed
  int min_recorded = 200;    // floor on recorded (post-transient) iterates
  double transient_fraction = 1.0 / 3.0;
  double escape_radius = 0.0;     // 0 → 100 × initial radius from center
  double fixed_point_tol = 0.0;   // 0 → 1e-3 × initial radius
  int harmonics = 8;              // trigonometric fit order
  double closure_rel_tol = 1e-3;  // defect ≤ tol × diameter to confirm
  double resonance_tol = 1e-3;    // min distance of rotation number to p/q
  int resonance_max_q = 6;
};

struct TorusReport {
  double l1 = std::numeric_limits<double>::quiet_NaN();
  double side = 0.0;  // sign of l1 (mu − mu(eps)) when the scan knows it
  bool curve_found = false;
  std::string verdict;                  // curve verdict
  std::string orbit_verdict;            // enclosed-orbit verdict (scan fills)
  std::vector<Eigen::Vector2d> points;  // recorded iterates
  std::vector<Eigen::Vector2d> curve;   // fitted closed-curve samples
  double rotation_number = 0.0;         // mean angular advance / 2π
  double closure_defect = 0.0;          // max radial fit residual
  double diameter = 0.0;                // bounding-box diagonal of points
  int iterates = 0;                     // recorded count
};

/// Iterates the map from the seed, discards the transient, and fits a
/// closed curve (periodic trigonometric series in the polar angle around
/// `center`).  Confirmation requires ≥ min_recorded iterates, closure
/// defect ≤ closure_rel_tol × diameter, and a rotation number bounded away
/// from rationals p/q (q ≤ resonance_max_q) by resonance_tol.  Escapes and
/// convergence to the fixed point produce the corresponding verdicts.
TorusReport detect_invariant_curve(const Map2& map,
                                   const Eigen::Vector2d& center,
                                   const Eigen::Vector2d& seed,
                                   const CurveOptions& opts = {});

/// Newton (forward-difference Jacobian) on map(x) − x.
Eigen::Vector2d map_fixed_point(const Map2& map, Eigen::Vector2d guess,
                                double tol = 1e-11, int max_iters = 60);

// -------- section return maps of a 3-D flow --------

struct SectionMapOptions {
  double max_time = 200.0;
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
  /// Optional crossing filter (e.g. the x > 0 half of a z = 0 section);
  /// rejected crossings are skipped, up to max_skips per map call.
  std::function<bool(const Eigen::Vector3d&)> accept;
  int max_skips = 8;
};

/// Orthonormal in-plane chart of a section: x = offset·n̂ + u1 e1 + u2 e2.
struct SectionChart {
  Eigen::Vector3d e1, e2, normal;
  double offset = 0.0;
  Eigen::Vector2d project(const Eigen::Vector3d& x) const {
    return {e1.dot(x), e2.dot(x)};
  }
  Eigen::Vector3d embed(const Eigen::Vector2d& u) const {
    return offset * normal + u(0) * e1 + u(1) * e2;
  }
};

SectionChart section_chart(const stability::SpatialSection& section);

/// First-return map on the section, in chart coordinates, via
/// stability::next_crossing.
Map2 section_return_map(const stability::Field3& f,
                        const stability::SpatialSection& section,
                        const SectionMapOptions& opts = {});

/// Return map of the time-reversed flow (field −f, crossing direction
/// flipped); attracting for curves that repel the forward flow.
Map2 reversed_section_return_map(const stability::Field3& f,
                                 const stability::SpatialSection& section,
                                 const SectionMapOptions& opts = {});

// -------- parameter scan for the existence boundary --------

struct ScanProblem {
  std::function<Map2(double mu)> forward;
  std::function<Map2(double mu)> reversed;  // null → skip reversed runs
  std::function<Eigen::Vector2d(double mu)> fixed_point_guess;
  std::function<Eigen::Vector2d(double mu, const Eigen::Vector2d& fp)> seed;
  CurveOptions options;
};

struct RegimeRow {
  double mu = 0.0;
  Eigen::Vector2d fixed_point{0.0, 0.0};
  double multiplier_excess = 0.0;  // |multiplier|² − 1 (complex pair)
  bool complex_pair = false;
  bool curve_forward = false;   // confirmed attracting curve (forward map)
  bool curve_reversed = false;  // confirmed repelling curve (reversed map)
  double rotation_number = 0.0;
  std::string verdict;
};

struct RegimeTable {
  std::vector<RegimeRow> rows;
  double mu0 = std::numeric_limits<double>::quiet_NaN();  // crossing (input)
  double l1 = std::numeric_limits<double>::quiet_NaN();   // input, echoed
  bool boundary_found = false;
  double boundary_mu = std::numeric_limits<double>::quiet_NaN();
  char existence_side = '?';       // '<' or '>' of boundary_mu
  std::string curve_stability;     // "attracting" | "repelling" | "?"
};

/// Tabulates curve detection (forward and reversed) over a μ grid and
/// locates the existence boundary μ(eps) by bisection, to the given
/// resolution, on the sign of the fixed point's multiplier-modulus excess
/// (the Neimark–Sacker crossing of the return map, which bounds the
/// curve's existence region).
RegimeTable torus_regime_scan(
    const ScanProblem& prob, double mu_lo, double mu_hi, int grid_points,
    double l1 = std::numeric_limits<double>::quiet_NaN(),
    double mu0 = std::numeric_limits<double>::quiet_NaN(),
    double boundary_resolution = 1e-3);

}  // namespace zerohopf::torus
