#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lagflow/analysis.hpp"
#include "lagflow/config.hpp"
#include "lagflow/mesh.hpp"

namespace lagflow {

// ---------------------------------------------------------------------------
// Convergence under refinement with tau / h_max^2 fixed

struct ConvergenceRow {
  double h_max = 0.0;
  double tau = 0.0;
  int steps = 0;
  int nodes = 0;
  double l1_error = 0.0;  ///< at the final time, -1 when the run failed
  double seconds = 0.0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;  ///< least-squares order of l1_error in h_max
  static constexpr double reference_slope = 1.18;
  std::string failure;  ///< first failed run, empty when all completed
  bool completed() const { return failure.empty(); }
};

/// The experiment1 setup on every h_max with tau = T / ceil(T / (ratio h_max^2)),
/// so each run ends exactly at T.
ConvergenceStudy convergence_study(const std::vector<double>& h_values = {0.2, 0.1, 0.05, 0.025},
                                   double final_time = 0.2, double ratio = 0.4);

// ---------------------------------------------------------------------------
// Consistency of the discrete Euler-Lagrange equation

struct ConsistencyRow {
  std::string lattice;
  std::string flow;
  double eps = 0.0;
  double tau = 0.0;
  double momentum_residual = 0.0;
  double impulse_residual = 0.0;
};

struct ConsistencySeries {
  std::string lattice;
  std::string flow;
  double momentum_slope = 0.0;
  double impulse_slope = 0.0;
};

struct ConsistencyStudy {
  std::vector<ConsistencyRow> rows;
  std::vector<ConsistencySeries> series;
};

/// Hexagonal lattice: dilation and shear_drift flows under V = |x|^2 at w0 = (0.3, 0.2).
/// Skew lattice: the counterexample flow with V = 0 at the origin. All at t = 0.5, tau = eps / 10.
ConsistencyStudy consistency_study(const std::vector<double>& eps_values = {0.1, 0.05, 0.025});

// ---------------------------------------------------------------------------
// Algebraic identities and the non-convexity witness

struct WitnessSample {
  Mat2 a = Mat2::Identity();
  double rho = 1.0;
  double m = 2.0;
  NonconvexityWitness witness;
  double relative_fd_error = 0.0;
  bool passed() const { return witness.analytic < 0.0 && relative_fd_error <= 1e-6; }
};

struct IdentityStudy {
  std::vector<IdentityCheck> checks;
  std::vector<WitnessSample> witnesses;
  bool passed() const;
};

IdentityStudy identity_study(unsigned seed = 12345, int num_witnesses = 20);

// ---------------------------------------------------------------------------

/// Writes <kind>.csv into out_dir and a summary to `report`. Returns 0 when
/// every run completed and every check passed.
int run_study(const std::string& kind, const std::string& out_dir, std::ostream& report);
std::vector<std::string> study_kinds();

}  // namespace lagflow
