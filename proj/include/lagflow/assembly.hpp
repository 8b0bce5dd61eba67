#pragma once

#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "lagflow/mesh.hpp"
#include "lagflow/model.hpp"
#include "lagflow/types.hpp"

namespace lagflow {

/// Image positions G_l of all mesh nodes at one time level.
struct LagrangianState {
  std::vector<Vec2> positions;
  double time = 0.0;
};

/// G = identity on the reference nodes.
LagrangianState identity_state(const TriangleMesh& mesh, double time = 0.0);

/// How the potential energy of an image triangle is discretized.
///  exact_gradient: mu_m V(centroid); residual/Hessian are its exact derivatives (mu/3, mu/9).
///  half_weight:    mu_m V(centroid) / 2, whose derivatives carry the weights mu/6 and mu/18.
enum class PotentialQuadrature { exact_gradient, half_weight };

enum class Execution { serial, parallel };

struct TriangleMatrix {
  Mat2 q;               ///< (G1 - G0 | G2 - G0)
  double det = 0.0;     ///< det Q
  double det_affine = 0.0;  ///< det A = det Q / (2 |Delta|)
};

TriangleMatrix triangle_matrix(const LagrangianState& state, const TriangleMesh& mesh, int m);

/// Symmetric-pattern sparse matrix of 2x2 blocks indexed by mesh nodes; the
/// pattern is node adjacency plus the diagonal.
class SparseBlockMatrix {
 public:
  SparseBlockMatrix() = default;
  explicit SparseBlockMatrix(const TriangleMesh& mesh);

  int block_rows() const { return static_cast<int>(row_ptr_.size()) - 1; }
  int nonzero_blocks() const { return static_cast<int>(cols_.size()); }

  bool has_block(int row, int col) const { return find(row, col) >= 0; }
  /// Throws if (row, col) is not in the pattern.
  const Mat2& block(int row, int col) const;
  Mat2& block(int row, int col);

  std::span<const int> row_columns(int row) const;
  std::span<Mat2> row_blocks(int row);
  std::span<const Mat2> row_blocks(int row) const;

  void set_zero();
  /// Scalar (2L x 2L) compressed-column matrix with the same entries.
  Eigen::SparseMatrix<double> to_sparse() const;

 private:
  int find(int row, int col) const;

  std::vector<int> row_ptr_{0};
  std::vector<int> cols_;
  std::vector<Mat2> blocks_;
};

/// Per-node constraint projectors Pi_l (identity, d d^T, or zero).
class ConstraintProjector {
 public:
  explicit ConstraintProjector(const TriangleMesh& mesh);

  const Mat2& operator[](int l) const { return blocks_[l]; }
  bool trivial() const { return trivial_; }
  int size() const { return static_cast<int>(blocks_.size()); }

  void apply(std::span<Vec2> vectors) const;
  /// H <- Pi H Pi + (I - Pi) on the diagonal.
  void apply(SparseBlockMatrix& h) const;

 private:
  std::vector<Mat2> blocks_;
  bool trivial_ = true;
};

/// Evaluates the fully discrete minimizing-movement objective
///
///   E(G; G*) = |G - G*|^2_{L2(rho)} / (2 tau) + sum_m mu_m htilde(det Q_m / (2 mu_m)) + potential,
///
/// together with its exact gradient (the Euler-Lagrange residual) and exact
/// Hessian. Every per-triangle contribution is accumulated in ascending triangle
/// order, so serial and parallel execution give bitwise identical results.
class Assembler {
 public:
  Assembler(const TriangleMesh& mesh, const ReferenceDensity& ref, const EnergyModel& model,
            PotentialQuadrature quadrature = PotentialQuadrature::exact_gradient,
            Execution execution = Execution::parallel);

  const TriangleMesh& mesh() const { return mesh_; }
  const ReferenceDensity& reference() const { return ref_; }
  const EnergyModel& model() const { return model_; }
  PotentialQuadrature quadrature() const { return quadrature_; }
  Execution execution() const { return execution_; }
  const ConstraintProjector& projector() const { return projector_; }

  double internal_energy(const LagrangianState& state) const;
  double potential_energy(const LagrangianState& state) const;
  /// internal + potential: the discrete entropy E(G | rho).
  double energy(const LagrangianState& state) const;
  double l2_distance_sq(const LagrangianState& state, const LagrangianState& prev) const;
  double objective(const LagrangianState& state, const LagrangianState& prev, double tau) const;

  /// Projected gradient Pi_l dE/dG_l.
  std::vector<Vec2> residual(const LagrangianState& state, const LagrangianState& prev, double tau) const;
  /// Gradient with the pressure term only (no mass, no potential, no projection).
  std::vector<Vec2> pressure_force(const LagrangianState& state) const;
  /// Pi H Pi + (I - Pi).
  SparseBlockMatrix hessian(const LagrangianState& state, const LagrangianState& prev, double tau) const;

  double min_det(const LagrangianState& state) const;
  /// True iff every image triangle is positively oriented.
  bool admissible(const LagrangianState& state) const;

 private:
  double potential_weight() const { return quadrature_ == PotentialQuadrature::half_weight ? 0.5 : 1.0; }
  void require_admissible(const LagrangianState& state) const;

  const TriangleMesh& mesh_;
  const ReferenceDensity& ref_;
  const EnergyModel& model_;
  PotentialQuadrature quadrature_;
  Execution execution_;
  ConstraintProjector projector_;
};

/// Serial reference implementations: one triangle loop scattering straight into
/// the node arrays. Kept for testing the parallel kernels.
namespace serial {
double objective(const Assembler& a, const LagrangianState& state, const LagrangianState& prev, double tau);
std::vector<Vec2> residual(const Assembler& a, const LagrangianState& state, const LagrangianState& prev,
                           double tau);
SparseBlockMatrix hessian(const Assembler& a, const LagrangianState& state, const LagrangianState& prev,
                          double tau);
}  // namespace serial

/// Flattening helpers between node vectors and (2L) scalar vectors.
Eigen::VectorXd flatten(std::span<const Vec2> v);
std::vector<Vec2> unflatten(const Eigen::VectorXd& x);

}  // namespace lagflow
