#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "lagflow/analysis.hpp"
#include "oracles.hpp"

using namespace lagflow;

namespace {

/// Flow with G = identity for all t and a given reference density.
SmoothFlow static_flow(ScalarField rho, std::function<Vec2(const Vec2&)> grad) {
  SmoothFlow f;
  f.name = "static";
  f.map = [](double, const Vec2& w) { return w; };
  f.velocity = [](double, const Vec2&) { return Vec2::Zero().eval(); };
  f.jacobian = [](double, const Vec2&) { return Mat2::Identity().eval(); };
  f.hessian = [](double, const Vec2&) { return std::array<Mat2, 2>{Mat2::Zero(), Mat2::Zero()}; };
  f.density = std::move(rho);
  f.density_gradient = std::move(grad);
  return f;
}

}  // namespace

TEST(PushForward, IdentityAndDilation) {
  const TriangleMesh mesh = build_domain_mesh(SquareDomain{0, 1, 0, 1}, 0.2);
  const ReferenceDensity ref = init_reference_density(mesh, oracle::wavy_density);
  LagrangianState x = identity_state(mesh);
  PiecewiseDensity rho = pushforward_density(x, mesh, ref);
  for (int m = 0; m < rho.size(); ++m) EXPECT_NEAR(rho.density[m], ref.tri_value[m], 1e-14 * ref.tri_value[m]);
  for (auto& p : x.positions) p *= 2.0;
  rho = pushforward_density(x, mesh, ref);
  for (int m = 0; m < rho.size(); ++m) EXPECT_NEAR(rho.density[m], ref.tri_value[m] / 4.0, 1e-14);
}

TEST(PushForward, MassIdentity) {
  std::mt19937 rng(1);
  const TriangleMesh mesh = oracle::random_square_mesh(rng, 50, false);
  const ReferenceDensity ref = init_reference_density(mesh, oracle::wavy_density);
  const PiecewiseDensity rho = pushforward_density(oracle::random_state(rng, mesh, 0.03), mesh, ref);
  EXPECT_EQ(rho.total_mass, ref.total_mass);
  EXPECT_NEAR(rho.integrated_mass(), ref.total_mass, 1e-14 * ref.total_mass);
}

TEST(Barenblatt, FreeProfileValues) {
  EXPECT_NEAR(barenblatt_free(1.0, Vec2::Zero()), std::pow(2.0 * std::numbers::pi, -1.0 / 3.0), 1e-15);
  const double c = std::pow(2.0 * std::numbers::pi, -2.0 / 3.0);
  // At the support edge only the rounding of C - |x|^2/3 survives the square root.
  EXPECT_LT(barenblatt_free(1.0, Vec2(std::sqrt(3.0 * c), 0.0)), 1e-7);
  EXPECT_EQ(barenblatt_free(1.0, Vec2(1.000001 * std::sqrt(3.0 * c), 0.0)), 0.0);
  EXPECT_NEAR(barenblatt_support_radius(1.0), std::sqrt(3.0 * c), 1e-15);
}

TEST(Barenblatt, FreeProfileMass) {
  for (double mass : {1.0, 2.5}) {
    for (double t : {0.01, 1.0, 3.0}) {
      const double radius = barenblatt_support_radius(t, mass);
      const double q = oracle::radial_mass([&](double r) { return barenblatt_free(t, Vec2(0.0, r), mass); }, radius);
      EXPECT_NEAR(q, mass, 1e-6 * mass);
    }
  }
}

TEST(Barenblatt, SelfSimilarScaling) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> uni(-0.8, 0.8), time(0.05, 4.0);
  for (int k = 0; k < 50; ++k) {
    const double t = time(rng);
    const Vec2 x(uni(rng), uni(rng));
    const double lhs = barenblatt_free(t, x), rhs = std::pow(t, -1.0 / 3.0) * barenblatt_free(1.0, std::pow(t, -1.0 / 6.0) * x);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(Barenblatt, EvolvedProfileSolvesTheEquation) {
  // d_t rho = Laplace(rho^3) at interior points, by central differences.
  const double t0 = 0.05, t = 0.1, dt = 1e-5, dx = 1e-4;
  for (const Vec2& x : {Vec2(0.05, 0.02), Vec2(-0.1, 0.08), Vec2(0.0, 0.15)}) {
    const auto rho = [&](double s, const Vec2& y) { return barenblatt_free_evolved(t0, s, y); };
    const double dtrho = (rho(t + dt, x) - rho(t - dt, x)) / (2.0 * dt);
    const auto cube = [&](const Vec2& y) { return std::pow(rho(t, y), 3); };
    const double lap = (cube(x + Vec2(dx, 0)) + cube(x - Vec2(dx, 0)) + cube(x + Vec2(0, dx)) +
                        cube(x - Vec2(0, dx)) - 4.0 * cube(x)) /
                       (dx * dx);
    EXPECT_NEAR(dtrho, lap, 1e-4 * std::abs(dtrho)) << x.transpose();
  }
  EXPECT_EQ(barenblatt_free_evolved(0.01, 0.0, Vec2(0.01, 0.0)), barenblatt_free(0.01, Vec2(0.01, 0.0)));
}

TEST(Barenblatt, ConfinedSteadyState) {
  for (double mass : {1.0, 0.3}) {
    const double c = std::pow(5.0 * mass / (2.0 * std::numbers::pi), 2.0 / 3.0);
    const double edge = std::sqrt(3.0 * c / 5.0);
    EXPECT_LT(barenblatt_confined_steady(Vec2(0.0, edge), mass), 1e-7);
    EXPECT_EQ(barenblatt_confined_steady(Vec2(0.0, 1.000001 * edge), mass), 0.0);
    const double q =
        oracle::radial_mass([&](double r) { return barenblatt_confined_steady(Vec2(r, 0.0), mass); }, edge);
    EXPECT_NEAR(q, mass, 1e-6 * mass);
    EXPECT_NEAR(q, 2.0 * std::numbers::pi / 5.0 * std::pow(c, 1.5), 1e-6);

    // Zero flux inside the support: grad(rho^3) + rho grad V = 0 with V = 5|x|^2/2.
    const double dx = 1e-6;
    for (const Vec2& x : {Vec2(0.1, 0.05), Vec2(-0.2, 0.1), Vec2(0.0, 0.3 * edge)}) {
      const auto cube = [&](const Vec2& y) { return std::pow(barenblatt_confined_steady(y, mass), 3); };
      const Vec2 grad((cube(x + Vec2(dx, 0)) - cube(x - Vec2(dx, 0))) / (2 * dx),
                      (cube(x + Vec2(0, dx)) - cube(x - Vec2(0, dx))) / (2 * dx));
      const Vec2 flux = grad + barenblatt_confined_steady(x, mass) * 5.0 * x;
      EXPECT_LT(flux.norm(), 1e-8);
    }
  }
}

TEST(L1Error, SameStateAndConstantOracle) {
  const TriangleMesh mesh = build_domain_mesh(SquareDomain{0, 1, 0, 1}, 0.25);
  const ReferenceDensity one = init_reference_density(mesh, [](const Vec2&) { return 1.0; });
  const PiecewiseDensity rho = pushforward_density(identity_state(mesh), mesh, one);
  EXPECT_NEAR(l1_error(rho, [](const Vec2&) { return 0.0; }), 1.0, 1e-14);
  EXPECT_NEAR(l1_error(rho, [](const Vec2&) { return 1.0; }), 0.0, 1e-14);
}

TEST(Fits, LogLogSlope) {
  EXPECT_NEAR(fit_loglog_slope({{1, 1}, {2, 4}, {3, 9}}), 2.0, 1e-14);
  EXPECT_NEAR(fit_loglog_slope({{0.2, 0.7 * std::pow(0.2, 1.18)}, {0.1, 0.7 * std::pow(0.1, 1.18)},
                                {0.05, 0.7 * std::pow(0.05, 1.18)}}),
              1.18, 1e-13);
  EXPECT_NEAR(fit_loglog_slope({{1, 3}, {2, 3}, {5, 3}}), 0.0, 1e-15);
  EXPECT_THROW(fit_loglog_slope({{1, 0}, {2, 1}}), Error);
}

TEST(Fits, ExponentialRate) {
  std::vector<std::pair<double, double>> s;
  for (int k = 0; k < 8; ++k) s.emplace_back(0.01 * k, 3.0 * std::exp(-5.0 * 0.01 * k));
  EXPECT_NEAR(fit_exponential_rate(s), 5.0, 1e-12);
}

TEST(Velocity, ConfinedIdentity) {
  const SmoothFlow f = static_flow([](const Vec2&) { return 1.0; }, [](const Vec2&) { return Vec2::Zero().eval(); });
  EnergyModel model;
  model.potential = Potential::quadratic(2.5);
  for (const Vec2& w : {Vec2(0.3, -0.1), Vec2(1.0, 2.0)})
    EXPECT_LT((lagrangian_velocity(f, model, 0.0, w) + 2.5 * w).norm(), 1e-15);
}

TEST(Velocity, LinearDensityGradient) {
  const double e = 0.01;
  const SmoothFlow f = static_flow([e](const Vec2& w) { return 1.0 + e * w.x(); },
                                   [e](const Vec2&) { return Vec2(e, 0.0); });
  const EnergyModel model;
  const PowerLaw& law = model.internal;
  for (const Vec2& w : {Vec2(0.3, -0.1), Vec2(-2.0, 0.5)}) {
    const double r = 1.0 + e * w.x();
    const Vec2 expected = -law.pressure_derivative(r) * Vec2(e / r, 0.0);
    EXPECT_LT((lagrangian_velocity(f, model, 0.0, w) - expected).norm(), 1e-15);
  }
}

TEST(Velocity, UniformDilationIsForceFree) {
  SmoothFlow f = dilation_flow();
  f.density = [](const Vec2&) { return 1.0; };
  f.density_gradient = [](const Vec2&) { return Vec2::Zero().eval(); };
  const EnergyModel model;
  EXPECT_LT(lagrangian_velocity(f, model, 0.4, Vec2(0.3, 0.7)).norm(), 1e-15);
}

TEST(Flows, DerivativesMatchDifferences) {
  for (const SmoothFlow& f : {dilation_flow(), shear_drift_flow(), skew_counterexample_flow()}) {
    const double t = 0.5, h = 1e-6;
    const Vec2 w(0.3, -0.4);
    const Vec2 vel = (f.map(t + h, w) - f.map(t - h, w)) / (2 * h);
    EXPECT_LT((f.velocity(t, w) - vel).norm(), 1e-8) << f.name;
    for (int q = 0; q < 2; ++q) {
      const Vec2 e = Vec2::Unit(q) * h;
      const Vec2 col = (f.map(t, w + e) - f.map(t, w - e)) / (2 * h);
      EXPECT_LT((f.jacobian(t, w).col(q) - col).norm(), 1e-8) << f.name;
      const Mat2 dj = (f.jacobian(t, w + e) - f.jacobian(t, w - e)) / (2 * h);
      const auto hess = f.hessian(t, w);
      for (int s = 0; s < 2; ++s)
        for (int r = 0; r < 2; ++r) EXPECT_NEAR(hess[s](r, q), dj(s, r), 1e-8) << f.name;
    }
    const Vec2 grho((f.density(w + Vec2(h, 0)) - f.density(w - Vec2(h, 0))) / (2 * h),
                    (f.density(w + Vec2(0, h)) - f.density(w - Vec2(0, h))) / (2 * h));
    EXPECT_LT((f.density_gradient(w) - grho).norm(), 1e-8) << f.name;
  }
}

TEST(Consistency, StaticUniformStateHasNoResidual) {
  const SmoothFlow f = static_flow([](const Vec2&) { return 1.0; }, [](const Vec2&) { return Vec2::Zero().eval(); });
  const EnergyModel model;
  for (double eps : {0.1, 0.05}) {
    const ConsistencyResult r = consistency_probe(f, model, LatticeKind::hexagonal, eps, eps / 10, 0.5, Vec2(0.3, 0.2));
    EXPECT_LT(r.momentum_residual, 1e-14);
    EXPECT_LT(r.impulse_residual, 1e-14);
  }
}

TEST(Consistency, HexagonalOrderAndSkewBreakdown) {
  EnergyModel confined;
  confined.potential = Potential::quadratic(2.0);
  const std::vector<double> eps{0.1, 0.05, 0.025};
  for (const SmoothFlow& f : {dilation_flow(), shear_drift_flow()}) {
    std::vector<std::pair<double, double>> p, j;
    for (double e : eps) {
      const auto r = consistency_probe(f, confined, LatticeKind::hexagonal, e, e / 10, 0.5, Vec2(0.3, 0.2));
      p.emplace_back(e, r.momentum_residual);
      j.emplace_back(e, r.impulse_residual);
    }
    EXPECT_GE(fit_loglog_slope(p), 2.7) << f.name;
    EXPECT_GE(fit_loglog_slope(j), 2.7) << f.name;
  }
  std::vector<std::pair<double, double>> j;
  for (double e : eps) {
    const auto r = consistency_probe(skew_counterexample_flow(), EnergyModel{}, LatticeKind::skew, e, e / 10, 0.5,
                                     Vec2::Zero());
    j.emplace_back(e, r.impulse_residual);
  }
  EXPECT_LT(fit_loglog_slope(j), 3.0);
}

TEST(Quadrature, Degree5RuleIsExact) {
  const TriangleRule& rule = degree5_triangle_rule();
  double wsum = 0.0;
  for (double w : rule.weights) wsum += w;
  EXPECT_NEAR(wsum, 1.0, 1e-15);
  // Mean of xi1^a xi2^b over the reference triangle is 2 a! b! / (a + b + 2)!.
  const auto fact = [](int n) { return std::tgamma(n + 1.0); };
  for (int a = 0; a <= 5; ++a) {
    for (int b = 0; a + b <= 5; ++b) {
      double q = 0.0;
      for (std::size_t k = 0; k < rule.points.size(); ++k)
        q += rule.weights[k] * std::pow(rule.points[k].x(), a) * std::pow(rule.points[k].y(), b);
      EXPECT_NEAR(q, 2.0 * fact(a) * fact(b) / fact(a + b + 2), 1e-15) << a << "," << b;
    }
  }
}

TEST(Identities, SimplexAverage) {
  auto [l0, r0] = simplex_average_check(2, {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()});
  EXPECT_EQ(l0, 0.0);
  EXPECT_EQ(r0, 0.0);
  const Eigen::Vector3d c(1.0, -2.0, 0.5);
  auto [l1, r1] = simplex_average_check(2, {c, c, c});
  EXPECT_NEAR(l1, c.squaredNorm(), 1e-14);
  EXPECT_NEAR(r1, c.squaredNorm(), 1e-14);
}

TEST(Identities, NamedValues) {
  EXPECT_EQ(cofactor_deviation(Mat2::Identity()), 0.0);
  EXPECT_LT((hexagon_moment_sum() - std::sqrt(3.0) * Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((skew_curvature_sum() - Vec2(-1.0, -1.0)).cwiseAbs().maxCoeff(), 1e-12);
  for (const auto& c : identity_checks()) EXPECT_TRUE(c.passed()) << c.name << " " << c.max_deviation;
}

TEST(Nonconvexity, IdentityWitness) {
  const PowerLaw law(3.0);
  const NonconvexityWitness w = nonconvexity_witness(Mat2::Identity(), 1.0, law);
  EXPECT_DOUBLE_EQ(w.analytic, -2.0 * law.pressure(1.0));
  EXPECT_NEAR(w.finite_difference, w.analytic, 1e-6 * std::abs(w.analytic));
  EXPECT_DOUBLE_EQ(w.swap_direction, 2.0);
}

TEST(Nonconvexity, SampledWitnessesAreNegative) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> s(0.01, 100.0), m(1.2, 5.0);
  for (int k = 0; k < 100; ++k) {
    const PowerLaw law(m(rng));
    const double sb = s(rng);
    EXPECT_LE(sb * law.htilde_d1(sb), 0.0);
  }
}
