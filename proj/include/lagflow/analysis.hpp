#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lagflow/assembly.hpp"
#include "lagflow/mesh.hpp"
#include "lagflow/model.hpp"
#include "lagflow/types.hpp"

namespace lagflow {

// ---------------------------------------------------------------------------
// Closed-form solutions (m = 3)

/// Free self-similar profile t^(-1/3) (C - |t^(-1/6) x|^2 / 3)_+^(1/2) with
/// C = (mass / 2pi)^(2/3).
double barenblatt_free(double t, const Vec2& x, double mass = 1.0);

/// Solution of d_t rho = Laplace(rho^3) that equals barenblatt_free(t0, .) at
/// t = 0. The closed-form profile above is self-similar for the equation with
/// the Laplacian scaled by 1/6, so the equation's clock runs six times slower:
/// the result is barenblatt_free(t0 + 6 t, x, mass).
double barenblatt_free_evolved(double t0, double t, const Vec2& x, double mass = 1.0);

/// Steady state under V = 5|x|^2/2: (C - 5|x|^2/3)_+^(1/2) with
/// C = (5 mass / 2pi)^(2/3), so the profile integrates to `mass`.
double barenblatt_confined_steady(const Vec2& x, double mass = 1.0);

// ---------------------------------------------------------------------------
// Densities and error metrics

/// Piecewise-constant push-forward of the reference density.
struct PiecewiseDensity {
  std::vector<double> density;   ///< rho_m = 2 mu_m / det Q_m
  std::vector<double> area;      ///< image area det Q_m / 2
  std::vector<Vec2> centroid;    ///< image centroid
  std::vector<double> tri_mass;  ///< mu_m, carried through unchanged
  double total_mass = 0.0;       ///< sum of mu_m in triangle order

  int size() const { return static_cast<int>(density.size()); }
  /// sum_m rho_m * area_m in triangle order; equal to total_mass up to rounding.
  double integrated_mass() const;
};

PiecewiseDensity pushforward_density(const LagrangianState& state, const TriangleMesh& mesh,
                                     const ReferenceDensity& ref);

/// sum_m |rho_m - oracle(centroid_m)| * area_m.
double l1_error(const PiecewiseDensity& density, const ScalarField& oracle);

/// Least-squares slope of log y against log x. All data must be positive.
double fit_loglog_slope(const std::vector<std::pair<double, double>>& series);

/// Least-squares rate k of y ~ exp(-k t), i.e. minus the slope of log y against t.
double fit_exponential_rate(const std::vector<std::pair<double, double>>& series);

// ---------------------------------------------------------------------------
// Smooth Lagrangian flows

/// Analytic flow with hand-coded derivatives. `hessian(t, w)[s](q, r)` is
/// d^2 G_s / dw_q dw_r.
struct SmoothFlow {
  std::string name;
  std::function<Vec2(double, const Vec2&)> map;
  std::function<Vec2(double, const Vec2&)> velocity;
  std::function<Mat2(double, const Vec2&)> jacobian;
  std::function<std::array<Mat2, 2>(double, const Vec2&)> hessian;
  ScalarField density;
  std::function<Vec2(const Vec2&)> density_gradient;
};

/// G = lambda(t) w with lambda(t) = 1 + t/2; rho = 1 + 0.3 sin w1 cos w2.
SmoothFlow dilation_flow();
/// G = w + 0.1 t (sin w1, cos w2); rho = 1 + 0.3 sin w1 cos w2.
SmoothFlow shear_drift_flow();
/// G = w + (1 + t) (w2^2/2, w1^2/2), rho = 1: second derivatives only at (1,2,2) and (2,1,1).
SmoothFlow skew_counterexample_flow();

/// Velocity P'(rho/det DG) DG^{-T} (tr12[DG^{-1} D^2 G]^T - grad rho / rho) - grad V(G).
Vec2 lagrangian_velocity(const SmoothFlow& flow, const EnergyModel& model, double t, const Vec2& w);

/// Momentum and impulse of the node-wise Euler-Lagrange equation at the centre
/// of a lattice star, compared with their continuum limits.
struct ConsistencyResult {
  Vec2 momentum = Vec2::Zero();   ///< p0
  Vec2 impulse = Vec2::Zero();    ///< J0
  Vec2 momentum_limit = Vec2::Zero();  ///< A0 rho(w0) dG/dt
  Vec2 impulse_limit = Vec2::Zero();   ///< A0 rho(w0) V[G]
  double prefactor = 0.0;         ///< A0 = (area of the star) / 3
  double momentum_residual = 0.0;
  double impulse_residual = 0.0;
};

ConsistencyResult consistency_probe(const SmoothFlow& flow, const EnergyModel& model, LatticeKind kind,
                                    double eps, double tau, double t, const Vec2& w0);

// ---------------------------------------------------------------------------
// Quadrature

/// Rule on the reference triangle {xi1, xi2 >= 0, xi1 + xi2 <= 1}; weights sum to 1.
struct TriangleRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
};

/// 7-point rule exact for polynomials of degree 5.
const TriangleRule& degree5_triangle_rule();

// ---------------------------------------------------------------------------
// Algebraic identities

/// Average of |g0 + sum_j w_j (g_j - g0)|^2 over the standard d-simplex (exact
/// quadrature) against 2/((d+1)(d+2)) sum_{i<=j} g_i . g_j. Needs d + 1 vectors, 1 <= d <= 3.
std::pair<double, double> simplex_average_check(int d, const std::vector<Eigen::VectorXd>& g);

/// Third-order tensor b[p](q, r), symmetric in (q, r) for the identities below.
using Tensor3 = std::array<Mat2, 2>;

/// J A J^T - det(A) A^{-T}, max-abs entry.
double cofactor_deviation(const Mat2& a);
/// sum_k J(s_k - s_{k+1}) ((s_k + s_{k+1})/3)^T over the hexagonal offsets.
Mat2 hexagon_moment_sum();
/// sum_k tr[(s_k|s_{k+1})^{-1} (B:[s_k]^2 | B:[s_{k+1}]^2)] J(s_k - s_{k+1}) over the given offsets.
Vec2 curvature_sum(const Tensor3& b, LatticeKind kind = LatticeKind::hexagonal);
/// 2 sqrt(3) tr12[B]^T.
Vec2 hexagon_curvature_expected(const Tensor3& b);
/// The skew-lattice sum with b_122 = b_211 = 1.
Vec2 skew_curvature_sum();

struct IdentityCheck {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_deviation <= tolerance; }
};

/// All identities above on seeded random inputs.
std::vector<IdentityCheck> identity_checks(unsigned seed = 12345);

/// Second derivative at s = 0 of s -> htilde(det(A + s A J) / rho).
struct NonconvexityWitness {
  double s_bar = 0.0;
  double analytic = 0.0;       ///< 2 s htilde'(s)
  double finite_difference = 0.0;
  double swap_direction = 0.0;  ///< same derivative along A (0 1; 1 0): -2 s htilde'(s)
};

NonconvexityWitness nonconvexity_witness(const Mat2& a, double rho, const PowerLaw& law, double step = 1e-4);

}  // namespace lagflow
