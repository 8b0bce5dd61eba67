#include "lagflow/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

namespace lagflow {

int SolverConfig::num_steps() const {
  const double ratio = final_time / tau;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest)) return static_cast<int>(nearest);
  return static_cast<int>(std::ceil(ratio));
}

void check(const SolverConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw Error("tau must be positive");
  if (!(cfg.final_time >= cfg.tau)) throw Error("final time must be at least one time step");
  if (!(cfg.newton_tol > 0.0)) throw Error("newton_tol must be positive");
  if (cfg.max_newton_iters < 1) throw Error("max_newton_iters must be at least 1");
  if (cfg.max_damping_halvings < 0) throw Error("max_damping_halvings must be non-negative");
  if (cfg.regularization_floor < 0.0) throw Error("regularization_floor must be non-negative");
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

double max_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void add_shift(SparseMatrix& a, double shift) {
  for (int i = 0; i < a.rows(); ++i) a.coeffRef(i, i) += shift;
}

/// Solves H x = b; on failure the diagonal is shifted by an escalating amount.
/// The pattern of H is fixed for a mesh, so the symbolic analysis is reused.
class LinearSolver {
 public:
  explicit LinearSolver(const SolverConfig& cfg) : cfg_(cfg) {}

  Eigen::VectorXd solve(const SparseMatrix& h, const Eigen::VectorXd& b, NewtonStats& stats) {
    double shift = cfg_.regularization_floor;
    for (int attempt = 0; attempt < 40; ++attempt) {
      SparseMatrix a = h;
      if (shift > 0.0) add_shift(a, shift);
      Eigen::VectorXd x;
      if (try_solve(a, b, x)) return x;
      ++stats.regularizations;
      shift = shift > 0.0 ? 10.0 * shift : 1e-12 * std::max(1.0, scale(h));
    }
    throw Error("linear system is singular after regularization");
  }

 private:
  static double scale(const SparseMatrix& h) {
    double s = 0.0;
    for (int i = 0; i < h.rows(); ++i) s = std::max(s, std::abs(h.coeff(i, i)));
    return s;
  }

  bool try_solve(const SparseMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x) {
    if (cfg_.linear_solver == LinearSolverKind::direct) {
      if (!analyzed_) {
        lu_.analyzePattern(a);
        analyzed_ = true;
      }
      lu_.factorize(a);
      if (lu_.info() != Eigen::Success) return false;
      x = lu_.solve(b);
      return lu_.info() == Eigen::Success && x.allFinite();
    }
    Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<double>> it;
    it.setTolerance(1e-13);
    it.setMaxIterations(std::max<Eigen::Index>(200, 10 * a.rows()));
    it.compute(a);
    if (it.info() != Eigen::Success) return false;
    x = it.solve(b);
    return it.info() == Eigen::Success && x.allFinite();
  }

  const SolverConfig& cfg_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
};

LagrangianState displaced(const LagrangianState& x, const Eigen::VectorXd& delta, double alpha) {
  LagrangianState out = x;
  for (std::size_t l = 0; l < out.positions.size(); ++l) out.positions[l] += alpha * delta.segment<2>(2 * l);
  return out;
}

Eigen::VectorXd lumped_metric(const Assembler& a, double tau) {
  const auto& mesh = a.mesh();
  Eigen::VectorXd d(2 * mesh.num_nodes());
  for (int l = 0; l < mesh.num_nodes(); ++l) {
    double sum = 0.0;
    for (int m : mesh.incident_triangles(l)) sum += a.reference().tri_mass[m];
    d[2 * l] = d[2 * l + 1] = sum / (6.0 * tau);
  }
  return d;
}

}  // namespace

NewtonResult newton_solve(const Assembler& a, const LagrangianState& prev, const SolverConfig& cfg) {
  check(cfg);
  if (!a.admissible(prev)) throw Error("previous state is not orientation preserving");
  const double tau = cfg.tau;
  const bool damped = cfg.max_damping_halvings > 0;

  LagrangianState x = prev;
  x.time = prev.time + tau;
  double obj = a.objective(x, prev, tau);
  NewtonStats stats;
  LinearSolver solver(cfg);

  // Levenberg-Marquardt weight on the lumped metric diag(sum mu / 6 tau). It
  // grows when a step had to be damped and decays back to zero on full steps.
  const Eigen::VectorXd metric = lumped_metric(a, tau);
  double sigma = 0.0;
  const auto solve = [&](const SparseMatrix& h, const Eigen::VectorXd& rhs) {
    if (sigma == 0.0) return solver.solve(h, rhs, stats);
    SparseMatrix shifted = h;
    for (int i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) += sigma * metric[i];
    return solver.solve(shifted, rhs, stats);
  };

  for (int iter = 1; iter <= cfg.max_newton_iters; ++iter) {
    stats.iterations = iter;
    const Eigen::VectorXd z = flatten(a.residual(x, prev, tau));
    const SparseMatrix h = a.hessian(x, prev, tau).to_sparse();

    // An indefinite Hessian can give an ascent direction.
    Eigen::VectorXd delta = solve(h, -z);
    for (int k = 0; k < 40 && z.dot(delta) > 0.0; ++k) {
      sigma = sigma > 0.0 ? 10.0 * sigma : 1e-3;
      ++stats.regularizations;
      delta = solve(h, -z);
    }

    const double norm = max_norm(delta);
    stats.last_update = norm;
    stats.update_norms.push_back(norm);
    if (norm < cfg.newton_tol) {
      if (norm > 0.0) {
        LagrangianState trial = displaced(x, delta, 1.0);
        if (a.admissible(trial) && a.objective(trial, prev, tau) <= obj) x = std::move(trial);
      }
      return {std::move(x), std::move(stats)};
    }

    if (!damped) {
      LagrangianState trial = displaced(x, delta, 1.0);
      if (!a.admissible(trial)) throw NewtonFailure("undamped Newton step inverted a triangle", x, stats);
      x = std::move(trial);
      obj = a.objective(x, prev, tau);
      continue;
    }

    // Rounding makes the objective noisy at the level of a few ulps.
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(obj);
    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= cfg.max_damping_halvings; ++halving) {
      LagrangianState trial = displaced(x, delta, alpha);
      if (a.admissible(trial)) {
        const double trial_obj = a.objective(trial, prev, tau);
        if (trial_obj <= obj + slack) {
          x = std::move(trial);
          obj = std::min(obj, trial_obj);
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
      ++stats.damping_events;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "damping exhausted at Newton iteration " << iter << " (update norm " << norm << ")";
      throw NewtonFailure(os.str(), x, stats);
    }
    if (alpha == 1.0) {
      sigma = sigma < 1e-6 ? 0.0 : sigma / 3.0;
    } else {
      sigma = std::max(10.0 * sigma, 0.1);
    }
  }
  std::ostringstream os;
  os << "Newton did not converge in " << cfg.max_newton_iters << " iterations (last update " << stats.last_update
     << ")";
  throw NewtonFailure(os.str(), x, stats);
}

Stepper::Stepper(const Assembler& assembler, SolverConfig cfg) : assembler_(assembler), cfg_(std::move(cfg)) {
  check(cfg_);
}

DiagnosticsRecord Stepper::initial_record(const LagrangianState& state) const {
  DiagnosticsRecord r;
  r.step = 0;
  r.t = state.time;
  r.energy = assembler_.energy(state);
  r.mass = assembler_.reference().total_mass;
  r.min_det = assembler_.min_det(state);
  return r;
}

LagrangianState Stepper::advance(const LagrangianState& state, const DiagnosticsRecord& last,
                                 DiagnosticsRecord& next) const {
  NewtonResult res = newton_solve(assembler_, state, cfg_);
  next = DiagnosticsRecord{};
  next.step = last.step + 1;
  next.t = res.state.time;
  next.energy = assembler_.energy(res.state);
  next.mass = assembler_.reference().total_mass;
  next.min_det = assembler_.min_det(res.state);
  next.newton_iters = res.stats.iterations;
  next.damping_events = res.stats.damping_events;
  next.step_dissipation = assembler_.l2_distance_sq(res.state, state) / (2.0 * cfg_.tau);
  next.cumulative_dissipation = last.cumulative_dissipation + next.step_dissipation;
  if (next.energy > last.energy + 1e-12 * std::abs(last.energy)) {
    std::ostringstream os;
    os.precision(17);
    os << "energy increased at step " << next.step << ": " << last.energy << " -> " << next.energy;
    throw Error(os.str());
  }
  if (!(next.min_det > 0.0)) throw Error("orientation lost at step " + std::to_string(next.step));
  return std::move(res.state);
}

RunResult run(const Assembler& assembler, const LagrangianState& initial, const SolverConfig& cfg,
              const RunOptions& options) {
  const Stepper stepper(assembler, cfg);
  const int steps = cfg.num_steps();
  RunResult out;

  LagrangianState state = initial;
  DiagnosticsRecord record = stepper.initial_record(state);
  if (options.error) record.l1_error = options.error(state);
  out.diagnostics.push_back(record);
  if (options.on_record) options.on_record(record, state);

  const auto keep = [&](int step, const LagrangianState& s) {
    Frame f{step, s};
    if (options.on_frame) options.on_frame(f);
    if (options.keep_frames) out.frames.push_back(std::move(f));
  };
  keep(0, state);

  int last_kept = 0;
  for (int n = 1; n <= steps; ++n) {
    DiagnosticsRecord next;
    try {
      state = stepper.advance(state, record, next);
    } catch (const Error& e) {
      out.failure = "step " + std::to_string(n) + ": " + e.what();
      break;
    }
    if (options.error) next.l1_error = options.error(state);
    record = next;
    out.diagnostics.push_back(record);
    if (options.on_record) options.on_record(record, state);
    if ((options.frame_every > 0 && n % options.frame_every == 0) || n == steps) {
      keep(n, state);
      last_kept = n;
    }
  }
  if (!out.failure.empty() && last_kept != record.step) keep(record.step, state);
  out.completed = out.failure.empty();
  out.final_state = std::move(state);
  return out;
}

}  // namespace lagflow
