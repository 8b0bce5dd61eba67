#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lagflow/analysis.hpp"
#include "lagflow/assembly.hpp"
#include "lagflow/config.hpp"
#include "lagflow/mesh.hpp"
#include "lagflow/model.hpp"
#include "lagflow/stepper.hpp"

namespace lagflow {

/// Everything a run needs, built once from a configuration. The assembler
/// refers into the other members, so the object is neither copied nor moved.
class Experiment {
 public:
  explicit Experiment(RunConfig cfg);
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;

  const RunConfig& config() const { return cfg_; }
  const TriangleMesh& mesh() const { return mesh_; }
  const ReferenceDensity& reference() const { return ref_; }
  const EnergyModel& model() const { return model_; }
  const Assembler& assembler() const { return *assembler_; }

  LagrangianState initial_state() const { return identity_state(mesh_); }

  /// Mass of the closed-form reference; unset in the config means the
  /// discrete mass, times four on a quarter disc.
  double reference_mass() const;
  /// Closed-form density at time t, or null when no reference is configured.
  /// Returns nullptr as well where the profile is singular (free profile at time 0).
  std::function<double(const Vec2&)> reference_at(double t) const;
  /// l1 error of a state against the reference, -1 where it is undefined.
  double l1_error(const LagrangianState& state) const;

  RunResult run(RunOptions options = {}) const;

 private:
  RunConfig cfg_;
  TriangleMesh mesh_;
  ReferenceDensity ref_;
  EnergyModel model_;
  std::unique_ptr<Assembler> assembler_;
};

/// Writers for the run output files.
void write_diagnostics_header(std::ostream& out);
void write_diagnostics_row(std::ostream& out, const DiagnosticsRecord& record);
/// `id,x,y` node rows followed by `tri,density` rows.
void write_frame_csv(std::ostream& out, const LagrangianState& state, const PiecewiseDensity& density);
/// Legacy ASCII unstructured grid with a `density` cell scalar.
void write_frame_vtk(std::ostream& out, const LagrangianState& state, const TriangleMesh& mesh,
                     const PiecewiseDensity& density, const std::string& title);

/// Node positions and triangle densities read back from a frame CSV.
struct FrameData {
  std::vector<Vec2> positions;
  std::vector<double> density;
};
FrameData read_frame_csv(std::istream& in);

/// Runs the configuration and writes diagnostics.csv, frame_<n>.csv (and .vtk),
/// mesh.txt and run.log into cfg.output_dir. Returns 0 on success, 1 when a step
/// failed; partial outputs are kept in that case.
int run_experiment(const RunConfig& cfg, std::ostream* progress = nullptr);

/// "%.17g".
std::string format_number(double v);

}  // namespace lagflow
