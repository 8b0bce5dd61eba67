#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lagflow/mesh.hpp"
#include "lagflow/types.hpp"

namespace lagflow {

/// Porous-medium internal energy h(r) = r^m/(m-1) with pressure P(r) = r^m.
///
/// The scheme works with the transformed entropy htilde(s) = s*h(1/s), which
/// for this family is s^(1-m)/(m-1); its derivative satisfies
/// htilde'(s) = -P(1/s).
class PowerLaw {
 public:
  explicit PowerLaw(double m);

  double exponent() const { return m_; }

  double h(double r) const;
  double pressure(double r) const;
  double pressure_derivative(double r) const;

  double htilde(double s) const;
  double htilde_d1(double s) const;
  double htilde_d2(double s) const;

  bool operator==(const PowerLaw&) const = default;

 private:
  double m_;
};

/// External potential V with hand-coded gradient and Hessian.
class Potential {
 public:
  enum class Kind { zero, quadratic, quartic, custom };

  using ScalarFn = std::function<double(const Vec2&)>;
  using GradientFn = std::function<Vec2(const Vec2&)>;
  using HessianFn = std::function<Mat2(const Vec2&)>;

  static Potential zero();
  /// V(x) = lambda |x|^2 / 2.
  static Potential quadratic(double lambda);
  /// V(x, y) = 5 (x^2 + (1 - y^2)^2) / 2.
  static Potential quartic();
  static Potential custom(ScalarFn value, GradientFn gradient, HessianFn hessian);

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  bool is_zero() const { return kind_ == Kind::zero; }

  double value(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
  Mat2 hessian(const Vec2& x) const;

 private:
  Kind kind_ = Kind::zero;
  double lambda_ = 0.0;
  ScalarFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
};

struct EnergyModel {
  PowerLaw internal{3.0};
  Potential potential = Potential::zero();
};

using ScalarField = std::function<double(const Vec2&)>;

/// Piecewise-constant reference density: per-triangle masses mu_m and values
/// rho_m = mu_m / |Delta_m|. The masses are constants of a run.
struct ReferenceDensity {
  std::vector<double> tri_mass;
  std::vector<double> tri_value;
  double total_mass = 0.0;
};

/// mu_m = rho0(centroid_m) * |Delta_m|; total_mass sums mu_m in triangle order.
ReferenceDensity init_reference_density(const TriangleMesh& mesh, const ScalarField& rho0);

/// Closed-form initial densities used by the experiment presets.
struct InitialDensitySpec {
  enum class Kind { barenblatt_t0, exp2, two_peaks, bump };
  Kind kind = Kind::barenblatt_t0;
  double t0 = 0.01;  ///< only for barenblatt_t0

  bool operator==(const InitialDensitySpec&) const = default;
};

ScalarField preset_initial_density(const InitialDensitySpec& spec);
/// Parses `barenblatt_t0`, `exp2`, `two_peaks`, `bump`.
InitialDensitySpec::Kind initial_density_kind(const std::string& name);
std::string to_string(InitialDensitySpec::Kind kind);

/// Support radius of the free Barenblatt profile (m = 3) of the given mass at time t.
double barenblatt_support_radius(double t, double mass = 1.0);

}  // namespace lagflow
