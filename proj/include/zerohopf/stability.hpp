#pragma once

// Stability machinery for the located periodic orbits: time-T (Poincaré)
// maps of the standard-form systems with monodromy by variational
// integration, the Taylor expansion of the map's Jacobian along the
// eps-series of the fixed point, Routh–Hurwitz classification for the
// hyperbolic regime, and the diagonal eigenvalue ladder for the
// non-hyperbolic 2x2 shape via a polynomial similarity transform.
//
// Also hosts the spatial Poincaré section of a 3-D flow (crossing located
// by event-time Newton on dense output), shared with the invariant-torus
// detection.

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>

#include "zerohopf/averaging.hpp"

namespace zerohopf::stability {

using averaging::AveragedSet;

struct EscapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateEpsilonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OrbitNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedShape : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Stroboscopic {t = T} Poincaré map of a standard-form system.
struct PoincareMapHandle {
  systems::StandardFormSystem sys;
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
};

/// Π(z) = x(T, z, eps); throws EscapeError (with exit time) if the
/// trajectory leaves the system's domain box.
Eigen::VectorXd time_T_map(const PoincareMapHandle& h, const Eigen::VectorXd& z,
                           double eps);

struct OrbitResult {
  Eigen::VectorXd fixed_point;
  Eigen::MatrixXd monodromy;        // DΠ at the fixed point
  Eigen::VectorXcd multipliers;     // its eigenvalues
  int iterations = 0;
  double residual = 0.0;            // |Π(z)-z|_inf at acceptance
  double liouville_defect = 0.0;    // |det M - exp(∫ tr J)| / |det M|
};

/// Newton on Π - Id from the given seed; monodromy integrated alongside
/// via first-order variational equations.  Refuses eps below 1e-6 (every
/// point is near-fixed and the problem is degenerate).
OrbitResult locate_periodic_orbit(const PoincareMapHandle& h,
                                  const Eigen::VectorXd& seed, double eps);

/// Taylor coefficients A0, A1, A2 of DΠ(z(eps)) = Id + eps A0 + eps² A1 +
/// eps³ A2 + ... along z(eps) = z0 + eps z1 + eps² z2.
std::array<Eigen::MatrixXd, 3> a_matrices(const AveragedSet& av,
                                          const Eigen::VectorXd& z0,
                                          const Eigen::VectorXd& z1,
                                          const Eigen::VectorXd& z2);

enum class RouthHurwitz { Stable, Unstable, Marginal };

/// Routh–Hurwitz test for λ² + pλ + q: stable iff p > 0 and q > 0;
/// marginal when either coefficient vanishes within 1e-12.
RouthHurwitz routh_hurwitz_2(double p, double q);

/// Diagonal eigenvalue ladder of A(eps) = A0 + eps A1 + eps² A2 for the
/// 2x2 shape A0 = diag(0, mu), mu != 0.  Rates are quoted as exponents of
/// the multiplier deviation: an A(eps)-eigenvalue c·eps^j contributes
/// eps^{j+1}·c to the multiplier.
struct Ladder {
  std::array<double, 3> diag_slow{};  // eps^0..2 coefficients of the (1,1) slot
  std::array<double, 3> diag_fast{};  // eps^0..2 coefficients of the (2,2) slot
  double offdiag_defect = 0.0;  // largest off-diagonal coefficient left over
  struct Entry {
    int rate = 0;        // 0 means no resolvable leading term
    double coeff = 0.0;
  };
  Entry fast;  // multiplier 1 + eps·mu + ...
  Entry slow;  // multiplier 1 + eps^rate·coeff + ...
};

Ladder k_determined_ladder(const Eigen::MatrixXd& A0, const Eigen::MatrixXd& A1,
                           const Eigen::MatrixXd& A2, double floor = 1e-9);

enum class Classification {
  AsymptoticallyStable,
  Unstable,            // hyperbolic-regime instability (one or both signs bad)
  UnstableCylinders,   // mixed signs: stable/unstable manifolds are cylinders
  UnstableDim3,        // both multiplier deviations positive
  Undetermined,
};

std::string to_string(Classification c);

/// Sign-based classification of the two multiplier-deviation coefficients;
/// below `floor` in magnitude no sign claim is made.
Classification classify_ladder(const Ladder& ladder, double floor = 1e-9);

/// Hyperbolic-regime classification from the characteristic coefficients
/// (p, q) of the first averaged function's Jacobian.
Classification classify_routh_hurwitz(double p, double q);

// -------- spatial Poincaré sections of a 3-D flow --------

using Field3 = std::function<Eigen::Vector3d(const Eigen::Vector3d&)>;

struct SpatialSection {
  Eigen::Vector3d normal{0.0, 0.0, 1.0};
  double offset = 0.0;
  int direction = +1;  // sign demanded of normal·f at the crossing
  double transversality_floor = 1e-6;
  double crossing_tol = 1e-12;
};

struct Crossing {
  Eigen::Vector3d state;
  double time = 0.0;
  double speed = 0.0;  // normal·f at the crossing
};

/// First transversal crossing of the section after leaving it; located by
/// Newton on the event time over the integrator's dense output.
Crossing next_crossing(const Field3& f, const SpatialSection& section,
                       const Eigen::Vector3d& start, double max_time,
                       double rel_tol = 1e-12, double abs_tol = 1e-14);

}  // namespace zerohopf::stability
