#include "lagflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace lagflow {

Mat2 NodeConstraint::projector() const {
  switch (kind) {
    case Kind::free:
      return Mat2::Identity();
    case Kind::line:
      return direction * direction.transpose();
    case Kind::fixed:
      return Mat2::Zero();
  }
  return Mat2::Identity();
}

TriangleMesh::TriangleMesh(std::vector<Vec2> nodes, std::vector<Triangle> triangles,
                           std::vector<NodeConstraint> constraints)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)), constraints_(std::move(constraints)) {
  if (constraints_.empty()) constraints_.assign(nodes_.size(), NodeConstraint::free_node());
  build_topology();
}

void TriangleMesh::build_topology() {
  const int L = num_nodes();
  std::vector<std::vector<FanEntry>> raw(L);
  incident_.assign(L, {});
  neighbours_.assign(L, {});
  for (int m = 0; m < num_triangles(); ++m) {
    const auto& t = triangles_[m];
    bool in_range = true;
    for (int v : t) in_range = in_range && v >= 0 && v < L;
    if (!in_range) continue;
    for (int i = 0; i < 3; ++i) {
      const int l = t[i];
      raw[l].push_back({m, t[(i + 1) % 3], t[(i + 2) % 3]});
      incident_[l].push_back(m);
      neighbours_[l].push_back(t[(i + 1) % 3]);
      neighbours_[l].push_back(t[(i + 2) % 3]);
    }
  }
  fans_.assign(L, {});
  fan_closed_.assign(L, 0);
  for (int l = 0; l < L; ++l) {
    auto& nb = neighbours_[l];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    nb.erase(std::remove(nb.begin(), nb.end(), l), nb.end());

    const auto& entries = raw[l];
    if (entries.empty()) continue;
    // Chain entries by matching one entry's b with the next entry's a.
    std::map<int, int> by_a;
    std::set<int> b_values;
    for (int e = 0; e < static_cast<int>(entries.size()); ++e) {
      by_a.emplace(entries[e].a, e);
      b_values.insert(entries[e].b);
    }
    int start = -1;
    for (int e = 0; e < static_cast<int>(entries.size()); ++e) {
      if (!b_values.count(entries[e].a)) {
        start = e;
        break;
      }
    }
    const bool closed = start < 0;
    if (closed) start = 0;
    std::vector<char> seen(entries.size(), 0);
    int e = start;
    while (e >= 0 && !seen[e]) {
      seen[e] = 1;
      fans_[l].push_back(entries[e]);
      auto it = by_a.find(entries[e].b);
      e = it == by_a.end() ? -1 : it->second;
    }
    // Inconsistent fans keep the entries in a best-effort order; validate() reports them.
    for (std::size_t k = 0; k < entries.size(); ++k)
      if (!seen[k]) fans_[l].push_back(entries[k]);
    fan_closed_[l] = closed && e == start && fans_[l].size() == entries.size() ? 1 : 0;
  }
}

double TriangleMesh::reference_det(int m) const {
  const auto& t = triangles_[m];
  return cross(nodes_[t[1]] - nodes_[t[0]], nodes_[t[2]] - nodes_[t[0]]);
}

Vec2 TriangleMesh::reference_centroid(int m) const {
  const auto& t = triangles_[m];
  return (nodes_[t[0]] + nodes_[t[1]] + nodes_[t[2]]) / 3.0;
}

double TriangleMesh::total_area() const {
  double area = 0.0;
  for (int m = 0; m < num_triangles(); ++m) area += reference_area(m);
  return area;
}

double TriangleMesh::max_edge_length() const {
  double longest = 0.0;
  for (const auto& t : triangles_)
    for (int i = 0; i < 3; ++i)
      longest = std::max(longest, (nodes_[t[i]] - nodes_[t[(i + 1) % 3]]).norm());
  return longest;
}

int TriangleMesh::nearest_node(const Vec2& p) const {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int l = 0; l < num_nodes(); ++l) {
    const double d = (nodes_[l] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = l;
    }
  }
  return best;
}

std::vector<std::string> validate(const TriangleMesh& mesh) {
  std::vector<std::string> report;
  auto add = [&](const std::string& s) { report.push_back(s); };
  const int L = mesh.num_nodes();
  if (L == 0) add("mesh has no nodes");
  if (static_cast<int>(mesh.constraints().size()) != L)
    add("constraint table has " + std::to_string(mesh.constraints().size()) + " entries for " +
        std::to_string(L) + " nodes");

  std::set<std::array<int, 3>> seen;
  bool indices_ok = true;
  for (int m = 0; m < mesh.num_triangles(); ++m) {
    const auto& t = mesh.triangle(m);
    bool ok = true;
    for (int v : t) ok = ok && v >= 0 && v < L;
    if (!ok) {
      add("triangle " + std::to_string(m) + " has a node index out of range");
      indices_ok = false;
      continue;
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      add("triangle " + std::to_string(m) + " repeats a node");
      continue;
    }
    const double det = mesh.reference_det(m);
    if (!(det > 0.0)) {
      std::ostringstream os;
      os << "triangle " << m << " has non-positive reference area (det = " << det << ")";
      add(os.str());
    }
    auto key = t;
    std::sort(key.begin(), key.end());
    if (!seen.insert(key).second) add("triangle " + std::to_string(m) + " duplicates an earlier triangle");
  }
  if (!indices_ok) return report;

  for (int l = 0; l < L; ++l) {
    const auto& fan = mesh.fan(l);
    if (fan.empty()) {
      add("node " + std::to_string(l) + " has an empty fan (dangling node)");
      continue;
    }
    // Consecutive entries must share an edge; a closed fan also wraps around.
    const std::size_t n = fan.size();
    const std::size_t links = mesh.fan_closed(l) ? n : n - 1;
    for (std::size_t k = 0; k < links; ++k) {
      if (fan[k].b != fan[(k + 1) % n].a) {
        add("node " + std::to_string(l) + " has an inconsistent triangle fan");
        break;
      }
    }
  }
  return report;
}

std::array<Vec2, 6> lattice_offsets(LatticeKind kind) {
  std::array<Vec2, 6> s;
  if (kind == LatticeKind::hexagonal) {
    for (int k = 0; k < 6; ++k) {
      const double phi = std::numbers::pi * k / 3.0;
      s[k] = Vec2(std::cos(phi), std::sin(phi));
    }
    // Exact values where cos/sin round.
    s[0] = {1.0, 0.0};
    s[3] = {-1.0, 0.0};
    const double h = std::sqrt(3.0) / 2.0;
    s[1] = {0.5, h};
    s[2] = {-0.5, h};
    s[4] = {-0.5, -h};
    s[5] = {0.5, -h};
  } else {
    s[0] = {1.0, 0.0};
    s[1] = {0.5, 0.5};
    s[2] = {0.0, 1.0};
    s[3] = -s[0];
    s[4] = -s[1];
    s[5] = -s[2];
  }
  return s;
}

TriangleMesh build_hexagonal_patch(const LatticeSpec& spec, const Vec2& centre) {
  if (!(spec.spacing > 0.0)) throw Error("lattice spacing must be positive");
  if (!(spec.extent > 0.0)) throw Error("lattice region must be non-empty");
  const double eps = spec.spacing;

  if (spec.kind == LatticeKind::skew) {
    if (spec.extent < eps)
      throw Error("region too small: the skew star needs extent >= spacing to contain one interior node");
    const auto s = lattice_offsets(LatticeKind::skew);
    std::vector<Vec2> nodes{centre};
    for (const auto& sk : s) nodes.push_back(centre + eps * sk);
    std::vector<TriangleMesh::Triangle> tris;
    for (int k = 0; k < 6; ++k) tris.push_back({0, 1 + k, 1 + (k + 1) % 6});
    return TriangleMesh(std::move(nodes), std::move(tris));
  }

  // Lattice points centre + eps*(i*a + j*b), a = (1,0), b = (1/2, sqrt(3)/2).
  const auto s = lattice_offsets(LatticeKind::hexagonal);
  const Vec2 a = s[0], b = s[1];
  const int n = static_cast<int>(std::ceil(spec.extent / eps / (std::sqrt(3.0) / 2.0))) + 2;
  const double r2 = spec.extent * spec.extent * (1.0 + 1e-12);
  std::map<std::pair<int, int>, int> index;
  std::vector<Vec2> nodes;
  for (int j = -n; j <= n; ++j) {
    for (int i = -2 * n; i <= 2 * n; ++i) {
      const Vec2 off = eps * (i * a + j * b);
      if (off.squaredNorm() <= r2) {
        index[{i, j}] = static_cast<int>(nodes.size());
        nodes.push_back(centre + off);
      }
    }
  }
  auto find = [&](int i, int j) {
    auto it = index.find({i, j});
    return it == index.end() ? -1 : it->second;
  };
  std::vector<TriangleMesh::Triangle> tris;
  for (const auto& [ij, p] : index) {
    const auto [i, j] = ij;
    const int pa = find(i + 1, j), pb = find(i, j + 1), pab = find(i - 1, j + 1);
    if (pa >= 0 && pb >= 0) tris.push_back({p, pa, pb});      // up
    if (pb >= 0 && pab >= 0) tris.push_back({p, pb, pab});    // down, to the upper left
  }
  TriangleMesh mesh(std::move(nodes), std::move(tris));
  bool has_interior = false;
  for (int l = 0; l < mesh.num_nodes() && !has_interior; ++l)
    has_interior = mesh.fan_closed(l) && mesh.fan(l).size() == 6;
  if (!has_interior)
    throw Error("region too small: hexagonal patch of extent " + std::to_string(spec.extent) +
                " contains no interior node at spacing " + std::to_string(eps));
  return mesh;
}

double domain_diameter(const Domain& domain) {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, SquareDomain>)
          return std::hypot(d.xmax - d.xmin, d.ymax - d.ymin);
        else if constexpr (std::is_same_v<T, DiscDomain>)
          return 2.0 * d.radius;
        else
          return std::sqrt(2.0) * d.radius;
      },
      domain);
}

std::string describe(const Domain& domain) {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, SquareDomain>)
          os << "square [" << d.xmin << "," << d.xmax << "]x[" << d.ymin << "," << d.ymax << "]";
        else if constexpr (std::is_same_v<T, DiscDomain>)
          os << "disc r=" << d.radius;
        else
          os << "quarter_disc r=" << d.radius;
      },
      domain);
  return os.str();
}

namespace {

struct PointSet {
  std::vector<Vec2> points;
  std::vector<NodeConstraint> constraints;
  void add(const Vec2& p, NodeConstraint c = NodeConstraint::free_node()) {
    points.push_back(p);
    constraints.push_back(c);
  }
};

// Points of the hexagonal lattice (spacing eps, through `origin`) at distance
// >= margin inside the domain, where `inside_distance` is the signed distance.
template <class DistanceFn>
void add_lattice_points(PointSet& set, const Vec2& lo, const Vec2& hi, const Vec2& origin, double eps,
                        double margin, DistanceFn inside_distance) {
  const double row = eps * std::sqrt(3.0) / 2.0;
  const int j0 = static_cast<int>(std::floor((lo.y() - origin.y()) / row)) - 1;
  const int j1 = static_cast<int>(std::ceil((hi.y() - origin.y()) / row)) + 1;
  for (int j = j0; j <= j1; ++j) {
    const double y = origin.y() + j * row;
    const double shift = 0.5 * j * eps;
    const int i0 = static_cast<int>(std::floor((lo.x() - origin.x() - shift) / eps)) - 1;
    const int i1 = static_cast<int>(std::ceil((hi.x() - origin.x() - shift) / eps)) + 1;
    for (int i = i0; i <= i1; ++i) {
      const Vec2 p(origin.x() + shift + i * eps, y);
      if (inside_distance(p) >= margin) set.add(p);
    }
  }
}

PointSet domain_points(const Domain& domain, double eps) {
  PointSet set;
  const double margin = 0.5 * eps;
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, SquareDomain>) {
          const std::array<Vec2, 4> corners{Vec2(d.xmin, d.ymin), Vec2(d.xmax, d.ymin), Vec2(d.xmax, d.ymax),
                                            Vec2(d.xmin, d.ymax)};
          for (int s = 0; s < 4; ++s) {
            const Vec2 p = corners[s], q = corners[(s + 1) % 4];
            const int n = std::max(1, static_cast<int>(std::ceil((q - p).norm() / eps)));
            for (int k = 0; k < n; ++k) {
              Vec2 x = p + (q - p) * (static_cast<double>(k) / n);
              // Keep the side's constant coordinate exact.
              if (s == 0) x.y() = d.ymin;
              if (s == 1) x.x() = d.xmax;
              if (s == 2) x.y() = d.ymax;
              if (s == 3) x.x() = d.xmin;
              set.add(x);
            }
          }
          const Vec2 origin(0.5 * (d.xmin + d.xmax), 0.5 * (d.ymin + d.ymax));
          add_lattice_points(set, corners[0], corners[2], origin, eps, margin, [&](const Vec2& p) {
            return std::min({p.x() - d.xmin, d.xmax - p.x(), p.y() - d.ymin, d.ymax - p.y()});
          });
        } else if constexpr (std::is_same_v<T, DiscDomain>) {
          const double r = d.radius;
          const int n = std::max(8, static_cast<int>(std::ceil(2.0 * std::numbers::pi * r / eps)));
          for (int k = 0; k < n; ++k) {
            const double phi = 2.0 * std::numbers::pi * k / n;
            set.add(r * Vec2(std::cos(phi), std::sin(phi)));
          }
          add_lattice_points(set, Vec2(-r, -r), Vec2(r, r), Vec2::Zero(), eps, margin,
                             [&](const Vec2& p) { return r - p.norm(); });
        } else {
          const double r = d.radius;
          set.add(Vec2::Zero(), NodeConstraint::fixed_node());
          const int n_axis = std::max(1, static_cast<int>(std::ceil(r / eps)));
          const int n_arc = std::max(2, static_cast<int>(std::ceil(0.5 * std::numbers::pi * r / eps)));
          for (int k = 1; k <= n_axis; ++k) set.add(Vec2(r * k / n_axis, 0.0), NodeConstraint::line({1.0, 0.0}));
          for (int k = 1; k < n_arc; ++k) {
            const double phi = 0.5 * std::numbers::pi * k / n_arc;
            set.add(r * Vec2(std::cos(phi), std::sin(phi)));
          }
          for (int k = 1; k <= n_axis; ++k) set.add(Vec2(0.0, r * k / n_axis), NodeConstraint::line({0.0, 1.0}));
          add_lattice_points(set, Vec2::Zero(), Vec2(r, r), Vec2::Zero(), eps, margin,
                             [&](const Vec2& p) { return std::min({p.x(), p.y(), r - p.norm()}); });
        }
      },
      domain);
  return set;
}

}  // namespace

TriangleMesh build_domain_mesh(const Domain& domain, double h_max) {
  if (!(h_max > 0.0)) throw Error("h_max must be positive");
  const double diameter = domain_diameter(domain);
  if (!(diameter > 0.0)) throw Error("degenerate domain: " + describe(domain));
  if (h_max > diameter)
    throw Error("h_max = " + std::to_string(h_max) + " exceeds the diameter of " + describe(domain));

  double eps = h_max;
  for (int attempt = 0; attempt < 60; ++attempt) {
    PointSet set = domain_points(domain, eps);
    auto tris = delaunay_triangulate(set.points);
    TriangleMesh mesh(std::move(set.points), std::move(tris), std::move(set.constraints));
    if (mesh.max_edge_length() <= h_max * (1.0 + 1e-12)) {
      const auto report = validate(mesh);
      if (!report.empty()) throw Error("generated mesh is invalid: " + report.front());
      return mesh;
    }
    eps *= 0.95;
  }
  throw Error("could not mesh " + describe(domain) + " with h_max = " + std::to_string(h_max));
}

}  // namespace lagflow
