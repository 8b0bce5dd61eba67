#pragma once

// Per-triangle contributions shared by the serial reference loops and the
// parallel kernels. Vertex order follows the mesh triangle (counter-clockwise),
// so vertex i has successors (i+1, i+2) mod 3.

#include <array>

#include "lagflow/assembly.hpp"

namespace lagflow::detail {

struct TriangleTerms {
  bool mass = true;
  bool pressure = true;
  bool potential = true;
};

struct TriangleContext {
  const TriangleMesh& mesh;
  const ReferenceDensity& ref;
  const EnergyModel& model;
  double potential_weight;
};

using LocalGradient = std::array<Vec2, 3>;
using LocalHessian = std::array<std::array<Mat2, 3>, 3>;

inline std::array<Vec2, 3> vertices(const TriangleMesh& mesh, std::span<const Vec2> g, int m) {
  const auto& t = mesh.triangle(m);
  return {g[t[0]], g[t[1]], g[t[2]]};
}

inline double image_det(const std::array<Vec2, 3>& v) { return cross(v[1] - v[0], v[2] - v[0]); }

inline Vec2 image_centroid(const std::array<Vec2, 3>& v) { return (v[0] + v[1] + v[2]) / 3.0; }

inline double internal_term(const TriangleContext& c, int m, const std::array<Vec2, 3>& v) {
  const double mu = c.ref.tri_mass[m];
  return mu * c.model.internal.htilde(image_det(v) / (2.0 * mu));
}

inline double potential_term(const TriangleContext& c, int m, const std::array<Vec2, 3>& v) {
  return c.potential_weight * c.ref.tri_mass[m] * c.model.potential.value(image_centroid(v));
}

/// mu_m * (1/6) * sum_{i <= j} dG_i . dG_j
inline double l2_term(const TriangleContext& c, int m, const std::array<Vec2, 3>& d) {
  const double s = d[0].squaredNorm() + d[1].squaredNorm() + d[2].squaredNorm() + d[0].dot(d[1]) +
                   d[0].dot(d[2]) + d[1].dot(d[2]);
  return c.ref.tri_mass[m] * s / 6.0;
}

inline LocalGradient local_gradient(const TriangleContext& c, int m, const std::array<Vec2, 3>& v,
                                    const std::array<Vec2, 3>& d, double tau, TriangleTerms terms) {
  const double mu = c.ref.tri_mass[m];
  LocalGradient g{Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
  if (terms.mass) {
    const double w = mu / (12.0 * tau);
    for (int i = 0; i < 3; ++i) g[i] += w * (2.0 * d[i] + d[(i + 1) % 3] + d[(i + 2) % 3]);
  }
  if (terms.pressure) {
    const double dh = 0.5 * c.model.internal.htilde_d1(image_det(v) / (2.0 * mu));
    for (int i = 0; i < 3; ++i) g[i] += dh * quarter_turn(v[(i + 2) % 3] - v[(i + 1) % 3]);
  }
  if (terms.potential && !c.model.potential.is_zero()) {
    const Vec2 f = (c.potential_weight * mu / 3.0) * c.model.potential.gradient(image_centroid(v));
    for (int i = 0; i < 3; ++i) g[i] += f;
  }
  return g;
}

inline LocalHessian local_hessian(const TriangleContext& c, int m, const std::array<Vec2, 3>& v, double tau) {
  const double mu = c.ref.tri_mass[m];
  LocalHessian h;
  const double diag = mu / (6.0 * tau), off = mu / (12.0 * tau);
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < 3; ++l) h[i][l] = (i == l ? diag : off) * Mat2::Identity();

  // d det / d G_i = J (G_{i+2} - G_{i+1}).
  const double s = image_det(v) / (2.0 * mu);
  const double d1 = 0.5 * c.model.internal.htilde_d1(s);
  const double d2 = c.model.internal.htilde_d2(s) / (4.0 * mu);
  std::array<Vec2, 3> n;
  for (int i = 0; i < 3; ++i) n[i] = quarter_turn(v[(i + 2) % 3] - v[(i + 1) % 3]);
  const Mat2 j = quarter_turn_matrix();
  for (int i = 0; i < 3; ++i) {
    for (int l = 0; l < 3; ++l) {
      h[i][l] += d2 * n[i] * n[l].transpose();
      if (l == (i + 2) % 3) h[i][l] += d1 * j;
      if (l == (i + 1) % 3) h[i][l] -= d1 * j;
    }
  }
  if (!c.model.potential.is_zero()) {
    const Mat2 hv = (c.potential_weight * mu / 9.0) * c.model.potential.hessian(image_centroid(v));
    for (int i = 0; i < 3; ++i)
      for (int l = 0; l < 3; ++l) h[i][l] += hv;
  }
  return h;
}

}  // namespace lagflow::detail
