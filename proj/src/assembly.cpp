#include "lagflow/assembly.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include <Eigen/LU>

#include "triangle_kernels.hpp"

#ifdef LAGFLOW_HAVE_OPENMP
#include <omp.h>
#endif

namespace lagflow {

using detail::LocalGradient;
using detail::LocalHessian;
using detail::TriangleContext;
using detail::TriangleTerms;

LagrangianState identity_state(const TriangleMesh& mesh, double time) { return {mesh.nodes(), time}; }

TriangleMatrix triangle_matrix(const LagrangianState& state, const TriangleMesh& mesh, int m) {
  const auto v = detail::vertices(mesh, state.positions, m);
  TriangleMatrix out;
  out.q.col(0) = v[1] - v[0];
  out.q.col(1) = v[2] - v[0];
  out.det = out.q.determinant();
  out.det_affine = out.det / (2.0 * mesh.reference_area(m));
  return out;
}

// ---------------------------------------------------------------------------
// SparseBlockMatrix

SparseBlockMatrix::SparseBlockMatrix(const TriangleMesh& mesh) {
  const int L = mesh.num_nodes();
  row_ptr_.assign(1, 0);
  for (int l = 0; l < L; ++l) {
    std::vector<int> cols = mesh.neighbours(l);
    cols.push_back(l);
    std::sort(cols.begin(), cols.end());
    cols_.insert(cols_.end(), cols.begin(), cols.end());
    row_ptr_.push_back(static_cast<int>(cols_.size()));
  }
  blocks_.assign(cols_.size(), Mat2::Zero());
}

int SparseBlockMatrix::find(int row, int col) const {
  if (row < 0 || row >= block_rows()) return -1;
  const auto first = cols_.begin() + row_ptr_[row], last = cols_.begin() + row_ptr_[row + 1];
  const auto it = std::lower_bound(first, last, col);
  return it != last && *it == col ? static_cast<int>(it - cols_.begin()) : -1;
}

const Mat2& SparseBlockMatrix::block(int row, int col) const {
  const int k = find(row, col);
  if (k < 0) throw Error("block (" + std::to_string(row) + "," + std::to_string(col) + ") is not in the pattern");
  return blocks_[k];
}

Mat2& SparseBlockMatrix::block(int row, int col) {
  const int k = find(row, col);
  if (k < 0) throw Error("block (" + std::to_string(row) + "," + std::to_string(col) + ") is not in the pattern");
  return blocks_[k];
}

std::span<const int> SparseBlockMatrix::row_columns(int row) const {
  return {cols_.data() + row_ptr_[row], static_cast<std::size_t>(row_ptr_[row + 1] - row_ptr_[row])};
}

std::span<Mat2> SparseBlockMatrix::row_blocks(int row) {
  return {blocks_.data() + row_ptr_[row], static_cast<std::size_t>(row_ptr_[row + 1] - row_ptr_[row])};
}

std::span<const Mat2> SparseBlockMatrix::row_blocks(int row) const {
  return {blocks_.data() + row_ptr_[row], static_cast<std::size_t>(row_ptr_[row + 1] - row_ptr_[row])};
}

void SparseBlockMatrix::set_zero() { std::fill(blocks_.begin(), blocks_.end(), Mat2::Zero()); }

Eigen::SparseMatrix<double> SparseBlockMatrix::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * blocks_.size());
  for (int r = 0; r < block_rows(); ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) trips.emplace_back(2 * r + i, 2 * cols_[k] + j, blocks_[k](i, j));
  Eigen::SparseMatrix<double> a(2 * block_rows(), 2 * block_rows());
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

// ---------------------------------------------------------------------------
// ConstraintProjector

ConstraintProjector::ConstraintProjector(const TriangleMesh& mesh) {
  blocks_.reserve(mesh.num_nodes());
  for (int l = 0; l < mesh.num_nodes(); ++l) {
    blocks_.push_back(mesh.constraint(l).projector());
    trivial_ = trivial_ && mesh.constraint(l).kind == NodeConstraint::Kind::free;
  }
}

void ConstraintProjector::apply(std::span<Vec2> vectors) const {
  if (trivial_) return;
  for (int l = 0; l < size(); ++l) vectors[l] = blocks_[l] * vectors[l];
}

void ConstraintProjector::apply(SparseBlockMatrix& h) const {
  if (trivial_) return;
  for (int r = 0; r < h.block_rows(); ++r) {
    const auto cols = h.row_columns(r);
    auto blocks = h.row_blocks(r);
    // Each product is formed once and mirrored, so block symmetry stays exact.
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const int c = cols[k];
      if (c < r) continue;
      const Mat2 b = blocks_[r] * blocks[k] * blocks_[c];
      if (c == r) {
        blocks[k] = 0.5 * (b + b.transpose()) + (Mat2::Identity() - blocks_[r]);
      } else {
        blocks[k] = b;
        h.block(c, r) = b.transpose();
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Assembler (parallel kernels)

namespace {

template <class Fn>
void for_each_index(Execution exec, int n, Fn&& fn) {
#ifdef LAGFLOW_HAVE_OPENMP
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
#endif
  (void)exec;
  for (int i = 0; i < n; ++i) fn(i);
}

std::vector<Vec2> differences(const LagrangianState& state, const LagrangianState& prev) {
  if (state.positions.size() != prev.positions.size())
    throw Error("states of different size (" + std::to_string(state.positions.size()) + " vs " +
                std::to_string(prev.positions.size()) + ")");
  std::vector<Vec2> d(state.positions.size());
  for (std::size_t l = 0; l < d.size(); ++l) d[l] = state.positions[l] - prev.positions[l];
  return d;
}

int local_index(const TriangleMesh::Triangle& t, int node) {
  return t[0] == node ? 0 : (t[1] == node ? 1 : 2);
}

}  // namespace

Assembler::Assembler(const TriangleMesh& mesh, const ReferenceDensity& ref, const EnergyModel& model,
                     PotentialQuadrature quadrature, Execution execution)
    : mesh_(mesh), ref_(ref), model_(model), quadrature_(quadrature), execution_(execution), projector_(mesh) {
  if (static_cast<int>(ref.tri_mass.size()) != mesh.num_triangles())
    throw Error("reference density has " + std::to_string(ref.tri_mass.size()) + " masses for " +
                std::to_string(mesh.num_triangles()) + " triangles");
}

void Assembler::require_admissible(const LagrangianState& state) const {
  if (static_cast<int>(state.positions.size()) != mesh_.num_nodes())
    throw Error("state has " + std::to_string(state.positions.size()) + " positions for " +
                std::to_string(mesh_.num_nodes()) + " nodes");
  for (int m = 0; m < mesh_.num_triangles(); ++m) {
    const double det = detail::image_det(detail::vertices(mesh_, state.positions, m));
    if (!(det > 0.0)) {
      std::ostringstream os;
      os << "image triangle " << m << " is not positively oriented (det Q = " << det << ")";
      throw Error(os.str());
    }
  }
}

double Assembler::min_det(const LagrangianState& state) const {
  double lo = std::numeric_limits<double>::infinity();
  for (int m = 0; m < mesh_.num_triangles(); ++m)
    lo = std::min(lo, detail::image_det(detail::vertices(mesh_, state.positions, m)));
  return lo;
}

bool Assembler::admissible(const LagrangianState& state) const {
  if (static_cast<int>(state.positions.size()) != mesh_.num_nodes()) return false;
  return min_det(state) > 0.0;
}

double Assembler::internal_energy(const LagrangianState& state) const {
  require_admissible(state);
  const TriangleContext ctx{mesh_, ref_, model_, potential_weight()};
  std::vector<double> terms(mesh_.num_triangles());
  for_each_index(execution_, mesh_.num_triangles(), [&](int m) {
    terms[m] = detail::internal_term(ctx, m, detail::vertices(mesh_, state.positions, m));
  });
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum;
}

double Assembler::potential_energy(const LagrangianState& state) const {
  if (model_.potential.is_zero()) return 0.0;
  const TriangleContext ctx{mesh_, ref_, model_, potential_weight()};
  std::vector<double> terms(mesh_.num_triangles());
  for_each_index(execution_, mesh_.num_triangles(), [&](int m) {
    terms[m] = detail::potential_term(ctx, m, detail::vertices(mesh_, state.positions, m));
  });
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum;
}

double Assembler::energy(const LagrangianState& state) const {
  return internal_energy(state) + potential_energy(state);
}

double Assembler::l2_distance_sq(const LagrangianState& state, const LagrangianState& prev) const {
  const auto d = differences(state, prev);
  const TriangleContext ctx{mesh_, ref_, model_, potential_weight()};
  std::vector<double> terms(mesh_.num_triangles());
  for_each_index(execution_, mesh_.num_triangles(),
                 [&](int m) { terms[m] = detail::l2_term(ctx, m, detail::vertices(mesh_, d, m)); });
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum;
}

double Assembler::objective(const LagrangianState& state, const LagrangianState& prev, double tau) const {
  if (!(tau > 0.0)) throw Error("time step must be positive");
  return l2_distance_sq(state, prev) / (2.0 * tau) + internal_energy(state) + potential_energy(state);
}

namespace {

std::vector<Vec2> gather_gradient(const Assembler& a, Execution exec, const std::vector<LocalGradient>& local) {
  const auto& mesh = a.mesh();
  std::vector<Vec2> z(mesh.num_nodes());
  for_each_index(exec, mesh.num_nodes(), [&](int l) {
    Vec2 acc = Vec2::Zero();
    for (int m : mesh.incident_triangles(l)) acc += local[m][local_index(mesh.triangle(m), l)];
    z[l] = acc;
  });
  return z;
}

}  // namespace

std::vector<Vec2> Assembler::residual(const LagrangianState& state, const LagrangianState& prev,
                                      double tau) const {
  if (!(tau > 0.0)) throw Error("time step must be positive");
  require_admissible(state);
  const auto d = differences(state, prev);
  const TriangleContext ctx{mesh_, ref_, model_, potential_weight()};
  std::vector<LocalGradient> local(mesh_.num_triangles());
  for_each_index(execution_, mesh_.num_triangles(), [&](int m) {
    local[m] = detail::local_gradient(ctx, m, detail::vertices(mesh_, state.positions, m),
                                      detail::vertices(mesh_, d, m), tau, TriangleTerms{});
  });
  auto z = gather_gradient(*this, execution_, local);
  projector_.apply(z);
  return z;
}

std::vector<Vec2> Assembler::pressure_force(const LagrangianState& state) const {
  require_admissible(state);
  const TriangleContext ctx{mesh_, ref_, model_, potential_weight()};
  const std::array<Vec2, 3> none{Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
  std::vector<LocalGradient> local(mesh_.num_triangles());
  for_each_index(execution_, mesh_.num_triangles(), [&](int m) {
    local[m] = detail::local_gradient(ctx, m, detail::vertices(mesh_, state.positions, m), none, 1.0,
                                      TriangleTerms{false, true, false});
  });
  return gather_gradient(*this, execution_, local);
}

SparseBlockMatrix Assembler::hessian(const LagrangianState& state, const LagrangianState& prev, double tau) const {
  if (!(tau > 0.0)) throw Error("time step must be positive");
  require_admissible(state);
  (void)differences(state, prev);
  const TriangleContext ctx{mesh_, ref_, model_, potential_weight()};
  std::vector<LocalHessian> local(mesh_.num_triangles());
  for_each_index(execution_, mesh_.num_triangles(), [&](int m) {
    local[m] = detail::local_hessian(ctx, m, detail::vertices(mesh_, state.positions, m), tau);
  });
  SparseBlockMatrix h(mesh_);
  // Row ownership: each row gathers its incident triangles in ascending order.
  for_each_index(execution_, mesh_.num_nodes(), [&](int l) {
    const auto cols = h.row_columns(l);
    auto blocks = h.row_blocks(l);
    for (int m : mesh_.incident_triangles(l)) {
      const auto& t = mesh_.triangle(m);
      const int i = local_index(t, l);
      for (int k = 0; k < 3; ++k) {
        const auto pos = std::lower_bound(cols.begin(), cols.end(), t[k]) - cols.begin();
        blocks[pos] += local[m][i][k];
      }
    }
  });
  projector_.apply(h);
  return h;
}

// ---------------------------------------------------------------------------
// Serial reference loops

namespace serial {

double objective(const Assembler& a, const LagrangianState& state, const LagrangianState& prev, double tau) {
  const auto& mesh = a.mesh();
  const TriangleContext ctx{mesh, a.reference(), a.model(),
                            a.quadrature() == PotentialQuadrature::half_weight ? 0.5 : 1.0};
  const auto d = differences(state, prev);
  double l2 = 0.0, internal = 0.0, potential = 0.0;
  for (int m = 0; m < mesh.num_triangles(); ++m) {
    const auto v = detail::vertices(mesh, state.positions, m);
    if (!(detail::image_det(v) > 0.0))
      throw Error("image triangle " + std::to_string(m) + " is not positively oriented");
    l2 += detail::l2_term(ctx, m, detail::vertices(mesh, d, m));
    internal += detail::internal_term(ctx, m, v);
    if (!a.model().potential.is_zero()) potential += detail::potential_term(ctx, m, v);
  }
  return l2 / (2.0 * tau) + internal + potential;
}

std::vector<Vec2> residual(const Assembler& a, const LagrangianState& state, const LagrangianState& prev,
                           double tau) {
  const auto& mesh = a.mesh();
  const TriangleContext ctx{mesh, a.reference(), a.model(),
                            a.quadrature() == PotentialQuadrature::half_weight ? 0.5 : 1.0};
  const auto d = differences(state, prev);
  std::vector<Vec2> z(mesh.num_nodes(), Vec2::Zero());
  for (int m = 0; m < mesh.num_triangles(); ++m) {
    const auto v = detail::vertices(mesh, state.positions, m);
    if (!(detail::image_det(v) > 0.0))
      throw Error("image triangle " + std::to_string(m) + " is not positively oriented");
    const auto g = detail::local_gradient(ctx, m, v, detail::vertices(mesh, d, m), tau, TriangleTerms{});
    const auto& t = mesh.triangle(m);
    for (int i = 0; i < 3; ++i) z[t[i]] += g[i];
  }
  a.projector().apply(z);
  return z;
}

SparseBlockMatrix hessian(const Assembler& a, const LagrangianState& state, const LagrangianState& prev,
                          double tau) {
  const auto& mesh = a.mesh();
  const TriangleContext ctx{mesh, a.reference(), a.model(),
                            a.quadrature() == PotentialQuadrature::half_weight ? 0.5 : 1.0};
  (void)differences(state, prev);
  SparseBlockMatrix h(mesh);
  for (int m = 0; m < mesh.num_triangles(); ++m) {
    const auto v = detail::vertices(mesh, state.positions, m);
    if (!(detail::image_det(v) > 0.0))
      throw Error("image triangle " + std::to_string(m) + " is not positively oriented");
    const auto local = detail::local_hessian(ctx, m, v, tau);
    const auto& t = mesh.triangle(m);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) h.block(t[i], t[k]) += local[i][k];
  }
  a.projector().apply(h);
  return h;
}

}  // namespace serial

Eigen::VectorXd flatten(std::span<const Vec2> v) {
  Eigen::VectorXd x(2 * v.size());
  for (std::size_t l = 0; l < v.size(); ++l) x.segment<2>(2 * l) = v[l];
  return x;
}

std::vector<Vec2> unflatten(const Eigen::VectorXd& x) {
  std::vector<Vec2> v(x.size() / 2);
  for (std::size_t l = 0; l < v.size(); ++l) v[l] = x.segment<2>(2 * l);
  return v;
}

}  // namespace lagflow
