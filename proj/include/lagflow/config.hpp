#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lagflow/assembly.hpp"
#include "lagflow/mesh.hpp"
#include "lagflow/model.hpp"
#include "lagflow/stepper.hpp"

namespace lagflow {

struct PotentialSpec {
  Potential::Kind kind = Potential::Kind::zero;  ///< zero, quadratic or quartic
  double lambda = 1.0;                           ///< quadratic only

  Potential make() const;
  bool operator==(const PotentialSpec&) const = default;
};

/// Closed-form solution that the l1_error diagnostics column is measured against.
enum class ReferenceKind { none, barenblatt_free, barenblatt_confined };

struct RunConfig {
  std::string name = "custom";
  Domain domain = SquareDomain{};
  double h_max = 0.1;
  double m = 3.0;
  PotentialSpec potential;
  InitialDensitySpec initial;
  PotentialQuadrature quadrature = PotentialQuadrature::exact_gradient;
  SolverConfig solver;  ///< also holds tau and the final time

  std::string output_dir = "out";
  int frame_every = 0;  ///< 0 writes only the first and last frame
  bool vtk = false;
  ReferenceKind reference = ReferenceKind::none;
  double reference_t0 = 0.01;            ///< barenblatt_free: profile time at t = 0
  std::optional<double> reference_mass;  ///< unset: the discrete mass (x4 on a quarter disc)

  bool operator==(const RunConfig&) const = default;
};

/// Parse failure carrying every violation, each prefixed with its line number.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> messages);
  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
};

/// `experiment1` .. `experiment4`.
RunConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// INI text with sections [run] [mesh] [model] [solver] [output]. A `preset`
/// key in [run] starts from that preset; every other key overrides it.
RunConfig parse_config(const std::string& text);
/// Full-precision text that parse_config maps back to the same configuration.
std::string render_config(const RunConfig& cfg);

std::string to_string(ReferenceKind kind);
std::string to_string(PotentialQuadrature quadrature);

}  // namespace lagflow
