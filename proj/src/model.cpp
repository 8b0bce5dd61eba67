#include "lagflow/model.hpp"

#include <cmath>
#include <numbers>

#include "lagflow/analysis.hpp"

namespace lagflow {

PowerLaw::PowerLaw(double m) : m_(m) {
  if (!(m > 1.0)) throw Error("power-law exponent must satisfy m > 1 (got " + std::to_string(m) + ")");
}

double PowerLaw::h(double r) const { return std::pow(r, m_) / (m_ - 1.0); }
double PowerLaw::pressure(double r) const { return std::pow(r, m_); }
double PowerLaw::pressure_derivative(double r) const { return m_ * std::pow(r, m_ - 1.0); }

double PowerLaw::htilde(double s) const { return std::pow(s, 1.0 - m_) / (m_ - 1.0); }
double PowerLaw::htilde_d1(double s) const { return -std::pow(s, -m_); }
double PowerLaw::htilde_d2(double s) const { return m_ * std::pow(s, -m_ - 1.0); }

Potential Potential::zero() { return {}; }

Potential Potential::quadratic(double lambda) {
  Potential p;
  p.kind_ = Kind::quadratic;
  p.lambda_ = lambda;
  return p;
}

Potential Potential::quartic() {
  Potential p;
  p.kind_ = Kind::quartic;
  return p;
}

Potential Potential::custom(ScalarFn value, GradientFn gradient, HessianFn hessian) {
  Potential p;
  p.kind_ = Kind::custom;
  p.value_ = std::move(value);
  p.gradient_ = std::move(gradient);
  p.hessian_ = std::move(hessian);
  return p;
}

double Potential::value(const Vec2& x) const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::quadratic:
      return 0.5 * lambda_ * x.squaredNorm();
    case Kind::quartic: {
      const double w = 1.0 - x.y() * x.y();
      return 2.5 * (x.x() * x.x() + w * w);
    }
    case Kind::custom:
      return value_(x);
  }
  return 0.0;
}

Vec2 Potential::gradient(const Vec2& x) const {
  switch (kind_) {
    case Kind::zero:
      return Vec2::Zero();
    case Kind::quadratic:
      return lambda_ * x;
    case Kind::quartic:
      return {5.0 * x.x(), -10.0 * x.y() * (1.0 - x.y() * x.y())};
    case Kind::custom:
      return gradient_(x);
  }
  return Vec2::Zero();
}

Mat2 Potential::hessian(const Vec2& x) const {
  switch (kind_) {
    case Kind::zero:
      return Mat2::Zero();
    case Kind::quadratic:
      return lambda_ * Mat2::Identity();
    case Kind::quartic: {
      Mat2 h;
      h << 5.0, 0.0, 0.0, -10.0 + 30.0 * x.y() * x.y();
      return h;
    }
    case Kind::custom:
      return hessian_(x);
  }
  return Mat2::Zero();
}

ReferenceDensity init_reference_density(const TriangleMesh& mesh, const ScalarField& rho0) {
  ReferenceDensity ref;
  const int M = mesh.num_triangles();
  ref.tri_mass.resize(M);
  ref.tri_value.resize(M);
  for (int m = 0; m < M; ++m) {
    const Vec2 c = mesh.reference_centroid(m);
    const double value = rho0(c);
    if (!(value > 0.0))
      throw Error("initial density is not positive at the centroid of triangle " + std::to_string(m) + " (" +
                  std::to_string(c.x()) + ", " + std::to_string(c.y()) + "): " + std::to_string(value));
    ref.tri_value[m] = value;
    ref.tri_mass[m] = value * mesh.reference_area(m);
  }
  for (double mu : ref.tri_mass) ref.total_mass += mu;
  return ref;
}

double barenblatt_support_radius(double t, double mass) {
  const double c = std::pow(mass / (2.0 * std::numbers::pi), 2.0 / 3.0);
  return std::pow(t, 1.0 / 6.0) * std::sqrt(3.0 * c);
}

ScalarField preset_initial_density(const InitialDensitySpec& spec) {
  switch (spec.kind) {
    case InitialDensitySpec::Kind::barenblatt_t0: {
      if (!(spec.t0 > 0.0)) throw Error("barenblatt_t0 needs t0 > 0");
      const double t0 = spec.t0;
      return [t0](const Vec2& x) { return barenblatt_free(t0, x, 1.0); };
    }
    case InitialDensitySpec::Kind::exp2:
      return [](const Vec2& x) {
        return 3000.0 * x.squaredNorm() * std::exp(-5.0 * (std::abs(x.x()) + std::abs(x.y()))) + 0.1;
      };
    case InitialDensitySpec::Kind::two_peaks:
      return [](const Vec2& x) {
        const Vec2 c(0.35, 0.35);
        return std::exp(-20.0 * (x - c).squaredNorm()) + std::exp(-20.0 * (x + c).squaredNorm()) + 0.001;
      };
    case InitialDensitySpec::Kind::bump:
      return [](const Vec2& x) { return 1.0 - x.squaredNorm(); };
  }
  throw Error("unknown initial density preset");
}

InitialDensitySpec::Kind initial_density_kind(const std::string& name) {
  if (name == "barenblatt_t0") return InitialDensitySpec::Kind::barenblatt_t0;
  if (name == "exp2") return InitialDensitySpec::Kind::exp2;
  if (name == "two_peaks") return InitialDensitySpec::Kind::two_peaks;
  if (name == "bump") return InitialDensitySpec::Kind::bump;
  throw Error("unknown initial density preset '" + name + "'");
}

std::string to_string(InitialDensitySpec::Kind kind) {
  switch (kind) {
    case InitialDensitySpec::Kind::barenblatt_t0:
      return "barenblatt_t0";
    case InitialDensitySpec::Kind::exp2:
      return "exp2";
    case InitialDensitySpec::Kind::two_peaks:
      return "two_peaks";
    case InitialDensitySpec::Kind::bump:
      return "bump";
  }
  return "?";
}

}  // namespace lagflow
