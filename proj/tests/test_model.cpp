#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lagflow/model.hpp"
#include "oracles.hpp"

using namespace lagflow;

TEST(PowerLaw, CubicClosedForms) {
  const PowerLaw law(3.0);
  for (double s : {0.3, 1.0, 2.5}) {
    EXPECT_NEAR(law.htilde(s), 1.0 / (2.0 * s * s), 1e-15 * law.htilde(s));
    EXPECT_NEAR(law.htilde_d1(s), -1.0 / (s * s * s), 1e-15 * std::abs(law.htilde_d1(s)));
    EXPECT_NEAR(law.htilde_d2(s), 3.0 / std::pow(s, 4), 1e-15 * law.htilde_d2(s));
    EXPECT_DOUBLE_EQ(law.htilde_d1(s), -law.pressure(1.0 / s));
  }
}

TEST(PowerLaw, QuadraticClosedForms) {
  const PowerLaw law(2.0);
  for (double r : {0.5, 1.0, 3.0}) {
    EXPECT_DOUBLE_EQ(law.h(r), r * r);
    EXPECT_DOUBLE_EQ(law.pressure(r), r * r);
    EXPECT_DOUBLE_EQ(law.htilde(r), 1.0 / r);
  }
}

TEST(PowerLaw, SlopeAtOne) {
  for (double m : {1.5, 2.0, 3.0, 4.0, 7.0}) EXPECT_DOUBLE_EQ(PowerLaw(m).htilde_d1(1.0), -1.0) << m;
}

TEST(PowerLaw, DerivativeIsMinusPressureOfReciprocal) {
  for (double m : {1.5, 2.0, 3.0, 4.0}) {
    const PowerLaw law(m);
    for (int k = 0; k <= 60; ++k) {
      const double s = std::pow(10.0, -3.0 + 0.1 * k);
      const double p = law.pressure(1.0 / s);
      EXPECT_LE(std::abs(law.htilde_d1(s) + p), 1e-12 * p) << "m = " << m << " s = " << s;
    }
  }
}

TEST(PowerLaw, SecondDerivativeMatchesDifferences) {
  for (double m : {1.5, 2.0, 3.0, 4.0}) {
    const PowerLaw law(m);
    for (double s : {1e-2, 0.1, 0.7, 1.0, 4.0, 50.0}) {
      const double h = 1e-6 * s;
      const double fd = (law.htilde_d1(s + h) - law.htilde_d1(s - h)) / (2.0 * h);
      EXPECT_NEAR(law.htilde_d2(s), fd, 1e-6 * std::abs(fd)) << "m = " << m << " s = " << s;
    }
  }
}

TEST(PowerLaw, ConvexEnergyAndMonotonePressure) {
  for (double m : {1.5, 2.0, 3.0}) {
    const PowerLaw law(m);
    double last = -1.0;
    for (int k = 1; k < 200; ++k) {
      const double r = 0.02 * k, d = 0.01;
      EXPECT_GE(law.h(r + d) - 2.0 * law.h(r) + law.h(r - d), -1e-15);
      EXPECT_GE(law.pressure(r), 0.0);
      EXPECT_GE(law.pressure(r), last);
      EXPECT_GE(law.pressure_derivative(r), 0.0);
      last = law.pressure(r);
    }
  }
}

TEST(PowerLaw, RejectsExponentAtMostOne) { EXPECT_THROW(PowerLaw(1.0), Error); }

TEST(Potential, QuadraticAndQuartic) {
  const Potential q = Potential::quadratic(5.0);
  const Vec2 x(0.3, -0.7);
  EXPECT_DOUBLE_EQ(q.value(x), 2.5 * x.squaredNorm());
  EXPECT_TRUE(q.gradient(x).isApprox(5.0 * x));
  EXPECT_TRUE(q.hessian(x).isApprox(5.0 * Mat2::Identity()));

  const Potential v = Potential::quartic();
  const auto value = [&](const Eigen::VectorXd& y) { return v.value(Vec2(y[0], y[1])); };
  const Eigen::VectorXd g = oracle::fd_gradient(value, Eigen::Vector2d(x), 1e-6);
  EXPECT_LT((v.gradient(x) - g).norm(), 1e-8);
  const Eigen::MatrixXd h = oracle::fd_jacobian(
      [&](const Eigen::VectorXd& y) { return Eigen::VectorXd(v.gradient(Vec2(y[0], y[1]))); }, Eigen::Vector2d(x));
  EXPECT_LT((Eigen::MatrixXd(v.hessian(x)) - h).norm(), 1e-7);
  EXPECT_DOUBLE_EQ(v.value(Vec2(0.0, 1.0)), 0.0);
}

TEST(ReferenceDensity, UniformDensityGivesAreas) {
  const TriangleMesh mesh = build_domain_mesh(SquareDomain{-1, 2, 0, 1}, 0.3);
  const ReferenceDensity ref = init_reference_density(mesh, [](const Vec2&) { return 1.0; });
  for (int m = 0; m < mesh.num_triangles(); ++m) EXPECT_DOUBLE_EQ(ref.tri_mass[m], mesh.reference_area(m));
  EXPECT_NEAR(ref.total_mass, 3.0, 1e-12);
}

TEST(ReferenceDensity, SingleTriangle) {
  const TriangleMesh mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
  const ReferenceDensity ref = init_reference_density(mesh, [](const Vec2&) { return 2.0; });
  EXPECT_DOUBLE_EQ(ref.tri_mass[0], 1.0);
  EXPECT_DOUBLE_EQ(ref.tri_value[0], 2.0);
  EXPECT_DOUBLE_EQ(ref.total_mass, 1.0);
}

TEST(ReferenceDensity, TwoPeaksFloorKeepsMassPositive) {
  const TriangleMesh mesh = build_domain_mesh(SquareDomain{-1.5, 1.5, -1.5, 1.5}, 0.1);
  const ReferenceDensity ref =
      init_reference_density(mesh, preset_initial_density({InitialDensitySpec::Kind::two_peaks}));
  for (double mu : ref.tri_mass) EXPECT_GT(mu, 0.0);
}

TEST(ReferenceDensity, TotalIsTheOrderedSum) {
  const TriangleMesh mesh = build_domain_mesh(DiscDomain{1.0}, 0.1);
  const ReferenceDensity ref = init_reference_density(mesh, oracle::wavy_density);
  double sum = 0.0;
  for (double mu : ref.tri_mass) sum += mu;
  EXPECT_EQ(sum, ref.total_mass);
}

TEST(InitialDensity, PresetValues) {
  const double c3 = std::pow(2.0 * std::numbers::pi, -2.0 / 3.0);
  EXPECT_NEAR(preset_initial_density({InitialDensitySpec::Kind::barenblatt_t0, 1.0})(Vec2::Zero()), std::sqrt(c3),
              1e-15);
  EXPECT_NEAR(preset_initial_density({InitialDensitySpec::Kind::two_peaks})(Vec2(0.35, 0.35)),
              1.0 + std::exp(-20.0 * 0.98) + 0.001, 1e-15);
  EXPECT_DOUBLE_EQ(preset_initial_density({InitialDensitySpec::Kind::bump})(Vec2::Zero()), 1.0);
}

TEST(InitialDensity, BarenblattHasUnitMass) {
  for (double t0 : {0.01, 1.0}) {
    const auto rho = preset_initial_density({InitialDensitySpec::Kind::barenblatt_t0, t0});
    const double radius = barenblatt_support_radius(t0);
    const double mass = oracle::radial_mass([&](double r) { return rho(Vec2(r, 0.0)); }, radius);
    EXPECT_NEAR(mass, 1.0, 1e-6) << "t0 = " << t0;
    EXPECT_EQ(rho(Vec2(1.0001 * radius, 0.0)), 0.0);
  }
}

TEST(InitialDensity, NamesRoundTrip) {
  for (auto k : {InitialDensitySpec::Kind::barenblatt_t0, InitialDensitySpec::Kind::exp2,
                 InitialDensitySpec::Kind::two_peaks, InitialDensitySpec::Kind::bump})
    EXPECT_EQ(initial_density_kind(to_string(k)), k);
  EXPECT_THROW(initial_density_kind("gaussian"), Error);
}
