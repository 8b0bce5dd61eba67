#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "lagflow/mesh.hpp"

namespace lagflow {

namespace {

using Real = long double;

Real orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (Real(b.x()) - a.x()) * (Real(c.y()) - a.y()) - (Real(b.y()) - a.y()) * (Real(c.x()) - a.x());
}

// > 0 iff d lies strictly inside the circumcircle of the CCW triangle (a, b, c).
Real incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const Real adx = Real(a.x()) - d.x(), ady = Real(a.y()) - d.y();
  const Real bdx = Real(b.x()) - d.x(), bdy = Real(b.y()) - d.y();
  const Real cdx = Real(c.x()) - d.x(), cdy = Real(c.y()) - d.y();
  const Real ad = adx * adx + ady * ady, bd = bdx * bdx + bdy * bdy, cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

}  // namespace

std::vector<TriangleMesh::Triangle> delaunay_triangulate(const std::vector<Vec2>& input) {
  const int n = static_cast<int>(input.size());
  if (n < 3) throw Error("Delaunay triangulation needs at least 3 points");

  Vec2 lo = input[0], hi = input[0];
  for (const auto& p : input) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec2 mid = 0.5 * (lo + hi);
  const double span = std::max((hi - lo).maxCoeff(), 1e-300);

  std::vector<Vec2> pts = input;
  const double big = 64.0 * span;
  pts.push_back(mid + Vec2(-big, -big));
  pts.push_back(mid + Vec2(big, -big));
  pts.push_back(mid + Vec2(0.0, big));

  using Tri = std::array<int, 3>;
  std::vector<Tri> tris{{n, n + 1, n + 2}};

  // Insert in lexicographic order so consecutive points are close together.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return input[i].x() < input[j].x() || (input[i].x() == input[j].x() && input[i].y() < input[j].y());
  });

  std::vector<Tri> kept;
  std::map<std::pair<int, int>, int> edge_count;
  for (int p : order) {
    kept.clear();
    edge_count.clear();
    std::vector<Tri> bad;
    for (const auto& t : tris) {
      if (incircle(pts[t[0]], pts[t[1]], pts[t[2]], pts[p]) > 0)
        bad.push_back(t);
      else
        kept.push_back(t);
    }
    if (bad.empty()) throw Error("Delaunay insertion failed: duplicate or degenerate point");
    for (const auto& t : bad)
      for (int i = 0; i < 3; ++i) {
        const int u = t[i], v = t[(i + 1) % 3];
        ++edge_count[{std::min(u, v), std::max(u, v)}];
      }
    for (const auto& t : bad) {
      for (int i = 0; i < 3; ++i) {
        const int u = t[i], v = t[(i + 1) % 3];
        if (edge_count[{std::min(u, v), std::max(u, v)}] != 1) continue;
        if (orient(pts[u], pts[v], pts[p]) <= 0) throw Error("Delaunay cavity is not star-shaped");
        kept.push_back({u, v, p});
      }
    }
    tris.swap(kept);
  }

  std::vector<TriangleMesh::Triangle> out;
  out.reserve(tris.size());
  for (const auto& t : tris)
    if (t[0] < n && t[1] < n && t[2] < n) out.push_back(t);
  std::sort(out.begin(), out.end(), [](const Tri& a, const Tri& b) {
    auto sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return sa < sb;
  });
  return out;
}

}  // namespace lagflow
