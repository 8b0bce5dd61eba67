#include "lagflow/analysis.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/LU>

namespace lagflow {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

double barenblatt_free(double t, const Vec2& x, double mass) {
  if (!(t > 0.0)) throw Error("barenblatt_free needs t > 0");
  const double c = std::pow(mass / (2.0 * kPi), 2.0 / 3.0);
  const double y2 = std::pow(t, -1.0 / 3.0) * x.squaredNorm();
  const double core = c - y2 / 3.0;
  return core > 0.0 ? std::pow(t, -1.0 / 3.0) * std::sqrt(core) : 0.0;
}

double barenblatt_free_evolved(double t0, double t, const Vec2& x, double mass) {
  return barenblatt_free(t0 + 6.0 * t, x, mass);
}

double barenblatt_confined_steady(const Vec2& x, double mass) {
  const double c = std::pow(5.0 * mass / (2.0 * kPi), 2.0 / 3.0);
  const double core = c - 5.0 * x.squaredNorm() / 3.0;
  return core > 0.0 ? std::sqrt(core) : 0.0;
}

double PiecewiseDensity::integrated_mass() const {
  double sum = 0.0;
  for (int m = 0; m < size(); ++m) sum += density[m] * area[m];
  return sum;
}

PiecewiseDensity pushforward_density(const LagrangianState& state, const TriangleMesh& mesh,
                                     const ReferenceDensity& ref) {
  PiecewiseDensity out;
  const int M = mesh.num_triangles();
  out.density.resize(M);
  out.area.resize(M);
  out.centroid.resize(M);
  out.tri_mass = ref.tri_mass;
  for (int m = 0; m < M; ++m) {
    const auto& t = mesh.triangle(m);
    const Vec2& g0 = state.positions[t[0]];
    const Vec2& g1 = state.positions[t[1]];
    const Vec2& g2 = state.positions[t[2]];
    const double det = cross(g1 - g0, g2 - g0);
    if (!(det > 0.0)) throw Error("image triangle " + std::to_string(m) + " is degenerate or inverted");
    out.density[m] = 2.0 * ref.tri_mass[m] / det;
    out.area[m] = 0.5 * det;
    out.centroid[m] = (g0 + g1 + g2) / 3.0;
    out.total_mass += ref.tri_mass[m];
  }
  return out;
}

double l1_error(const PiecewiseDensity& density, const ScalarField& oracle) {
  double sum = 0.0;
  for (int m = 0; m < density.size(); ++m)
    sum += std::abs(density.density[m] - oracle(density.centroid[m])) * density.area[m];
  return sum;
}

namespace {

double least_squares_slope(const std::vector<std::pair<double, double>>& xy) {
  const double n = static_cast<double>(xy.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : xy) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw Error("slope fit needs at least two distinct abscissae");
  return sxy / sxx;
}

}  // namespace

double fit_loglog_slope(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 2) throw Error("slope fit needs at least 2 points");
  std::vector<std::pair<double, double>> logs;
  logs.reserve(series.size());
  for (const auto& [x, y] : series) {
    if (!(x > 0.0) || !(y > 0.0)) throw Error("log-log fit needs positive data");
    logs.emplace_back(std::log(x), std::log(y));
  }
  return least_squares_slope(logs);
}

double fit_exponential_rate(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 2) throw Error("rate fit needs at least 2 points");
  std::vector<std::pair<double, double>> logs;
  logs.reserve(series.size());
  for (const auto& [t, y] : series) {
    if (!(y > 0.0)) throw Error("exponential fit needs positive data");
    logs.emplace_back(t, std::log(y));
  }
  return -least_squares_slope(logs);
}

// ---------------------------------------------------------------------------
// Flow catalog

namespace {

double bumpy_density(const Vec2& w) { return 1.0 + 0.3 * std::sin(w.x()) * std::cos(w.y()); }

Vec2 bumpy_density_gradient(const Vec2& w) {
  return {0.3 * std::cos(w.x()) * std::cos(w.y()), -0.3 * std::sin(w.x()) * std::sin(w.y())};
}

}  // namespace

SmoothFlow dilation_flow() {
  SmoothFlow f;
  f.name = "dilation";
  f.map = [](double t, const Vec2& w) -> Vec2 { return (1.0 + 0.5 * t) * w; };
  f.velocity = [](double, const Vec2& w) -> Vec2 { return 0.5 * w; };
  f.jacobian = [](double t, const Vec2&) -> Mat2 { return (1.0 + 0.5 * t) * Mat2::Identity(); };
  f.hessian = [](double, const Vec2&) { return Tensor3{Mat2::Zero(), Mat2::Zero()}; };
  f.density = bumpy_density;
  f.density_gradient = bumpy_density_gradient;
  return f;
}

SmoothFlow shear_drift_flow() {
  SmoothFlow f;
  f.name = "shear_drift";
  f.map = [](double t, const Vec2& w) -> Vec2 {
    return w + 0.1 * t * Vec2(std::sin(w.x()), std::cos(w.y()));
  };
  f.velocity = [](double, const Vec2& w) -> Vec2 { return 0.1 * Vec2(std::sin(w.x()), std::cos(w.y())); };
  f.jacobian = [](double t, const Vec2& w) -> Mat2 {
    Mat2 j;
    j << 1.0 + 0.1 * t * std::cos(w.x()), 0.0, 0.0, 1.0 - 0.1 * t * std::sin(w.y());
    return j;
  };
  f.hessian = [](double t, const Vec2& w) {
    Tensor3 h{Mat2::Zero(), Mat2::Zero()};
    h[0](0, 0) = -0.1 * t * std::sin(w.x());
    h[1](1, 1) = -0.1 * t * std::cos(w.y());
    return h;
  };
  f.density = bumpy_density;
  f.density_gradient = bumpy_density_gradient;
  return f;
}

SmoothFlow skew_counterexample_flow() {
  SmoothFlow f;
  f.name = "skew_counterexample";
  f.map = [](double t, const Vec2& w) -> Vec2 {
    return w + (1.0 + t) * Vec2(0.5 * w.y() * w.y(), 0.5 * w.x() * w.x());
  };
  f.velocity = [](double, const Vec2& w) -> Vec2 { return {0.5 * w.y() * w.y(), 0.5 * w.x() * w.x()}; };
  f.jacobian = [](double t, const Vec2& w) -> Mat2 {
    Mat2 j;
    j << 1.0, (1.0 + t) * w.y(), (1.0 + t) * w.x(), 1.0;
    return j;
  };
  f.hessian = [](double t, const Vec2&) {
    Tensor3 h{Mat2::Zero(), Mat2::Zero()};
    h[0](1, 1) = 1.0 + t;
    h[1](0, 0) = 1.0 + t;
    return h;
  };
  f.density = [](const Vec2&) { return 1.0; };
  f.density_gradient = [](const Vec2&) -> Vec2 { return Vec2::Zero(); };
  return f;
}

Vec2 lagrangian_velocity(const SmoothFlow& flow, const EnergyModel& model, double t, const Vec2& w) {
  const Mat2 dg = flow.jacobian(t, w);
  const double det = dg.determinant();
  if (!(det > 0.0)) throw Error("flow Jacobian is singular or orientation-reversing");
  const double rho = flow.density(w);
  if (!(rho > 0.0)) throw Error("reference density must be positive");
  const Mat2 inv = dg.inverse();
  const Tensor3 d2g = flow.hessian(t, w);
  // (tr12 C)_r = sum_p C_{ppr}, C_{pqr} = sum_s inv_{ps} D2G_{sqr}
  Vec2 trace = Vec2::Zero();
  for (int r = 0; r < 2; ++r)
    for (int p = 0; p < 2; ++p)
      for (int s = 0; s < 2; ++s) trace[r] += inv(p, s) * d2g[s](p, r);
  const Vec2 inner = trace - flow.density_gradient(w) / rho;
  const Vec2 g = flow.map(t, w);
  return model.internal.pressure_derivative(rho / det) * (inv.transpose() * inner) - model.potential.gradient(g);
}

const TriangleRule& degree5_triangle_rule() {
  static const TriangleRule rule = [] {
    const double r15 = std::sqrt(15.0);
    const double a1 = (6.0 - r15) / 21.0, b1 = (9.0 + 2.0 * r15) / 21.0;
    const double a2 = (6.0 + r15) / 21.0, b2 = (9.0 - 2.0 * r15) / 21.0;
    const double w1 = (155.0 - r15) / 1200.0, w2 = (155.0 + r15) / 1200.0;
    TriangleRule r;
    r.points = {Vec2(1.0 / 3.0, 1.0 / 3.0), Vec2(a1, a1), Vec2(a1, b1), Vec2(b1, a1),
                Vec2(a2, a2), Vec2(a2, b2), Vec2(b2, a2)};
    r.weights = {9.0 / 40.0, w1, w1, w1, w2, w2, w2};
    return r;
  }();
  return rule;
}

ConsistencyResult consistency_probe(const SmoothFlow& flow, const EnergyModel& model, LatticeKind kind,
                                    double eps, double tau, double t, const Vec2& w0) {
  if (!(eps > 0.0) || !(tau > 0.0)) throw Error("consistency probe needs eps > 0 and tau > 0");
  const TriangleMesh patch = build_hexagonal_patch({kind, eps, 1.01 * eps}, w0);
  const int c = patch.nearest_node(w0);
  if (!patch.fan_closed(c) || patch.fan(c).size() != 6) throw Error("probe node is not a valence-6 interior node");

  const auto& rule = degree5_triangle_rule();
  const auto at = [&](double time, int l) { return flow.map(time, patch.node(l)); };
  const Vec2 g0 = at(t, c), d0 = g0 - at(t - tau, c);

  ConsistencyResult out;
  double star_area = 0.0;
  for (const FanEntry& e : patch.fan(c)) {
    const Vec2 &wa = patch.node(e.a), &wb = patch.node(e.b);
    const double area = 0.5 * cross(wa - patch.node(c), wb - patch.node(c));
    star_area += area;
    double mu = 0.0;
    for (std::size_t i = 0; i < rule.points.size(); ++i) {
      const Vec2 x = patch.node(c) + rule.points[i].x() * (wa - patch.node(c)) + rule.points[i].y() * (wb - patch.node(c));
      mu += rule.weights[i] * flow.density(x);
    }
    mu *= area;

    const Vec2 ga = at(t, e.a), gb = at(t, e.b);
    const Vec2 da = ga - at(t - tau, e.a), db = gb - at(t - tau, e.b);
    out.momentum += mu / 12.0 * (2.0 * d0 + da + db) / tau;

    const double det = cross(ga - g0, gb - g0);
    if (!(det > 0.0)) throw Error("interpolated star triangle is degenerate");
    out.impulse += 0.5 * model.internal.pressure(2.0 * mu / det) * quarter_turn(gb - ga);
    if (!model.potential.is_zero()) {
      Vec2 avg = Vec2::Zero();
      for (std::size_t i = 0; i < rule.points.size(); ++i) {
        const Vec2& xi = rule.points[i];
        const double lambda0 = 1.0 - xi.x() - xi.y();
        avg += rule.weights[i] * lambda0 * model.potential.gradient(lambda0 * g0 + xi.x() * ga + xi.y() * gb);
      }
      out.impulse -= mu * avg;
    }
  }
  out.prefactor = star_area / 3.0;
  const double rho0 = flow.density(w0);
  out.momentum_limit = out.prefactor * rho0 * flow.velocity(t, w0);
  out.impulse_limit = out.prefactor * rho0 * lagrangian_velocity(flow, model, t, w0);
  out.momentum_residual = (out.momentum - out.momentum_limit).norm();
  out.impulse_residual = (out.impulse - out.impulse_limit).norm();
  return out;
}

// ---------------------------------------------------------------------------
// Identities

std::pair<double, double> simplex_average_check(int d, const std::vector<Eigen::VectorXd>& g) {
  if (d < 1 || d > 3) throw Error("simplex_average_check supports d = 1, 2, 3");
  if (static_cast<int>(g.size()) != d + 1) throw Error("simplex_average_check needs d + 1 vectors");

  // Degree-2 exact rules on the standard simplex, barycentric weights w_1..w_d.
  std::vector<std::vector<double>> points;
  std::vector<double> weights;
  if (d == 1) {
    const double h = 0.5 / std::sqrt(3.0);
    points = {{0.5 - h}, {0.5 + h}};
    weights = {0.5, 0.5};
  } else if (d == 2) {
    points = {{0.5, 0.0}, {0.0, 0.5}, {0.5, 0.5}};
    weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  } else {
    const double a = 0.5854101966249685, b = 0.1381966011250105;
    points = {{b, b, b}, {a, b, b}, {b, a, b}, {b, b, a}};
    weights = {0.25, 0.25, 0.25, 0.25};
  }

  double lhs = 0.0;
  for (std::size_t q = 0; q < points.size(); ++q) {
    Eigen::VectorXd v = g[0];
    for (int j = 1; j <= d; ++j) v += points[q][j - 1] * (g[j] - g[0]);
    lhs += weights[q] * v.squaredNorm();
  }
  double sum = 0.0;
  for (int i = 0; i <= d; ++i)
    for (int j = i; j <= d; ++j) sum += g[i].dot(g[j]);
  const double rhs = 2.0 / ((d + 1.0) * (d + 2.0)) * sum;
  return {lhs, rhs};
}

double cofactor_deviation(const Mat2& a) {
  const Mat2 j = quarter_turn_matrix();
  return (j * a * j.transpose() - a.determinant() * a.inverse().transpose()).cwiseAbs().maxCoeff();
}

Mat2 hexagon_moment_sum() {
  const auto s = lattice_offsets(LatticeKind::hexagonal);
  Mat2 sum = Mat2::Zero();
  for (int k = 0; k < 6; ++k) {
    const Vec2 &a = s[k], &b = s[(k + 1) % 6];
    sum += quarter_turn(a - b) * ((a + b) / 3.0).transpose();
  }
  return sum;
}

Vec2 curvature_sum(const Tensor3& b, LatticeKind kind) {
  const auto s = lattice_offsets(kind);
  const auto contract = [&](const Vec2& v) { return Vec2(v.dot(b[0] * v), v.dot(b[1] * v)); };
  Vec2 sum = Vec2::Zero();
  for (int k = 0; k < 6; ++k) {
    const Vec2 &a = s[k], &c = s[(k + 1) % 6];
    Mat2 edges, beta;
    edges << a, c;
    beta << contract(a), contract(c);
    sum += (edges.inverse() * beta).trace() * quarter_turn(a - c);
  }
  return sum;
}

Vec2 hexagon_curvature_expected(const Tensor3& b) {
  const Vec2 trace(b[0](0, 0) + b[1](1, 0), b[0](0, 1) + b[1](1, 1));
  return 2.0 * std::sqrt(3.0) * trace;
}

Vec2 skew_curvature_sum() {
  Tensor3 b{Mat2::Zero(), Mat2::Zero()};
  b[0](1, 1) = 1.0;
  b[1](0, 0) = 1.0;
  return curvature_sum(b, LatticeKind::skew);
}

std::vector<IdentityCheck> identity_checks(unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<IdentityCheck> out;

  for (int d = 1; d <= 3; ++d) {
    IdentityCheck c{"simplex average d=" + std::to_string(d), 0.0, 1e-10};
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Eigen::VectorXd> g(d + 1, Eigen::VectorXd(d));
      for (auto& v : g)
        for (int i = 0; i < d; ++i) v[i] = uni(rng);
      const auto [lhs, rhs] = simplex_average_check(d, g);
      c.max_deviation = std::max(c.max_deviation, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    out.push_back(c);
  }

  IdentityCheck b2{"quarter-turn cofactor", 0.0, 1e-12};
  for (int trial = 0; trial < 100; ++trial) {
    Mat2 a;
    do {
      a << uni(rng), uni(rng), uni(rng), uni(rng);
    } while (std::abs(a.determinant()) < 1e-3);
    b2.max_deviation = std::max(b2.max_deviation, cofactor_deviation(a));
  }
  out.push_back(b2);

  out.push_back({"hexagon moment sum", (hexagon_moment_sum() - std::sqrt(3.0) * Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-12});

  IdentityCheck b4{"hexagon curvature sum", 0.0, 1e-10};
  for (int trial = 0; trial < 100; ++trial) {
    Tensor3 b;
    for (auto& m : b) {
      const double off = uni(rng);
      m << uni(rng), off, off, uni(rng);
    }
    b4.max_deviation =
        std::max(b4.max_deviation, (curvature_sum(b) - hexagon_curvature_expected(b)).cwiseAbs().maxCoeff());
  }
  out.push_back(b4);

  out.push_back({"skew curvature sum", (skew_curvature_sum() - Vec2(-1.0, -1.0)).cwiseAbs().maxCoeff(), 1e-12});
  return out;
}

NonconvexityWitness nonconvexity_witness(const Mat2& a, double rho, const PowerLaw& law, double step) {
  if (!(a.determinant() > 0.0)) throw Error("nonconvexity witness needs det A > 0");
  if (!(rho > 0.0)) throw Error("nonconvexity witness needs rho > 0");
  const Mat2 dir = a * quarter_turn_matrix();
  const auto f = [&](double s) { return law.htilde((a + s * dir).determinant() / rho); };

  NonconvexityWitness w;
  w.s_bar = a.determinant() / rho;
  w.analytic = 2.0 * w.s_bar * law.htilde_d1(w.s_bar);
  w.finite_difference = (f(step) - 2.0 * f(0.0) + f(-step)) / (step * step);
  w.swap_direction = -w.analytic;
  return w;
}

}  // namespace lagflow
