#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lagflow/assembly.hpp"

namespace lagflow {

enum class LinearSolverKind { direct, iterative };

struct SolverConfig {
  double tau = 1e-3;
  double final_time = 1.0;
  double newton_tol = 1e-9;        ///< max-norm of the Newton update
  int max_newton_iters = 50;
  int max_damping_halvings = 30;   ///< 0 takes every full Newton step
  LinearSolverKind linear_solver = LinearSolverKind::direct;
  double regularization_floor = 0.0;

  /// ceil(T / tau) with a relative guard against T being a rounded multiple of tau.
  int num_steps() const;
  bool operator==(const SolverConfig&) const = default;
};

/// Throws when tau, T or the Newton settings are out of range.
void check(const SolverConfig& cfg);

struct NewtonStats {
  int iterations = 0;
  int damping_events = 0;      ///< number of step halvings
  int regularizations = 0;     ///< diagonal shifts applied to the linear system
  double last_update = 0.0;    ///< max-norm of the last full Newton update
  std::vector<double> update_norms;
};

/// Raised when Newton's method does not converge. Carries the best iterate.
class NewtonFailure : public Error {
 public:
  NewtonFailure(const std::string& what, LagrangianState best, NewtonStats stats)
      : Error(what), best_(std::move(best)), stats_(std::move(stats)) {}
  const LagrangianState& best() const { return best_; }
  const NewtonStats& stats() const { return stats_; }

 private:
  LagrangianState best_;
  NewtonStats stats_;
};

struct NewtonResult {
  LagrangianState state;
  NewtonStats stats;
};

/// Damped Newton iteration on the Euler-Lagrange system of one time step,
/// starting from G = prev. Trial steps are halved until every triangle stays
/// positively oriented and the objective does not increase.
NewtonResult newton_solve(const Assembler& assembler, const LagrangianState& prev, const SolverConfig& cfg);

struct DiagnosticsRecord {
  int step = 0;
  double t = 0.0;
  double energy = 0.0;
  double mass = 0.0;
  double min_det = 0.0;
  int newton_iters = 0;
  int damping_events = 0;
  double step_dissipation = 0.0;        ///< |G - G*|^2 / (2 tau)
  double cumulative_dissipation = 0.0;
  double l1_error = -1.0;               ///< negative when no reference solution is attached
};

/// Time loop state: the current map plus its diagnostics.
class Stepper {
 public:
  Stepper(const Assembler& assembler, SolverConfig cfg);

  /// Record for the initial state (step 0).
  DiagnosticsRecord initial_record(const LagrangianState& state) const;
  /// One minimizing-movement step; asserts energy monotonicity.
  LagrangianState advance(const LagrangianState& state, const DiagnosticsRecord& last,
                          DiagnosticsRecord& next) const;

  const SolverConfig& config() const { return cfg_; }
  const Assembler& assembler() const { return assembler_; }

 private:
  const Assembler& assembler_;
  SolverConfig cfg_;
};

struct Frame {
  int step = 0;
  LagrangianState state;
};

struct RunOptions {
  /// Keep a frame every `frame_every` steps; 0 keeps only the first and last.
  int frame_every = 0;
  /// Optional l1 error of a state against a reference solution.
  std::function<double(const LagrangianState&)> error;
  /// Called after every record, including the initial one.
  std::function<void(const DiagnosticsRecord&, const LagrangianState&)> on_record;
  /// Called for every kept frame.
  std::function<void(const Frame&)> on_frame;
  /// Keep frames in the result.
  bool keep_frames = true;
};

struct RunResult {
  std::vector<DiagnosticsRecord> diagnostics;
  std::vector<Frame> frames;
  LagrangianState final_state;
  bool completed = false;
  std::string failure;
};

/// Executes num_steps() steps from `initial`. A failing step stops the run and
/// is reported in `failure`; completed records and frames are kept.
RunResult run(const Assembler& assembler, const LagrangianState& initial, const SolverConfig& cfg,
              const RunOptions& options = {});

}  // namespace lagflow
