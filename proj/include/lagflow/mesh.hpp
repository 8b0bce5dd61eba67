#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "lagflow/types.hpp"

namespace lagflow {

/// Motion constraint attached to a node. Line-constrained nodes move only
/// along `direction`; fixed nodes do not move at all.
struct NodeConstraint {
  enum class Kind { free, line, fixed };

  Kind kind = Kind::free;
  Vec2 direction = Vec2::Zero();

  static NodeConstraint free_node() { return {}; }
  static NodeConstraint line(const Vec2& d) { return {Kind::line, d.normalized()}; }
  static NodeConstraint fixed_node() { return {Kind::fixed, Vec2::Zero()}; }

  /// 2x2 orthogonal projection onto the admissible displacements.
  Mat2 projector() const;

  bool operator==(const NodeConstraint& other) const = default;
};

/// One incident triangle of a node's fan: the triangle index and its other two
/// vertices (a, b), ordered so that (node, a, b) is counter-clockwise.
struct FanEntry {
  int triangle = -1;
  int a = -1;
  int b = -1;
};

/// Reference triangulation of the computational domain. Immutable once built;
/// fans and adjacency are derived in the constructor.
class TriangleMesh {
 public:
  using Triangle = std::array<int, 3>;

  TriangleMesh() = default;
  TriangleMesh(std::vector<Vec2> nodes, std::vector<Triangle> triangles,
               std::vector<NodeConstraint> constraints = {});

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }

  const std::vector<Vec2>& nodes() const { return nodes_; }
  const Vec2& node(int l) const { return nodes_[l]; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Triangle& triangle(int m) const { return triangles_[m]; }
  const std::vector<NodeConstraint>& constraints() const { return constraints_; }
  const NodeConstraint& constraint(int l) const { return constraints_[l]; }

  /// Counter-clockwise ordered fan of node l. For boundary nodes the fan is open
  /// and starts at the triangle adjacent to the boundary edge leaving l.
  const std::vector<FanEntry>& fan(int l) const { return fans_[l]; }
  bool fan_closed(int l) const { return fan_closed_[l] != 0; }
  /// Incident triangles of node l, ascending by index.
  const std::vector<int>& incident_triangles(int l) const { return incident_[l]; }
  /// Neighbour nodes of l (sorted ascending, without l itself).
  const std::vector<int>& neighbours(int l) const { return neighbours_[l]; }

  /// det(w1 - w0 | w2 - w0) of triangle m in reference coordinates (twice its area).
  double reference_det(int m) const;
  double reference_area(int m) const { return 0.5 * reference_det(m); }
  Vec2 reference_centroid(int m) const;
  double total_area() const;
  double max_edge_length() const;

  /// A node is interior when its fan is closed.
  bool is_interior(int l) const { return fan_closed(l); }
  /// Index of the node nearest to p.
  int nearest_node(const Vec2& p) const;

 private:
  void build_topology();

  std::vector<Vec2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<NodeConstraint> constraints_;
  std::vector<std::vector<FanEntry>> fans_;
  std::vector<char> fan_closed_;
  std::vector<std::vector<int>> incident_;
  std::vector<std::vector<int>> neighbours_;
};

/// Kinds of structured star lattices used by the consistency analysis.
enum class LatticeKind { hexagonal, skew };

struct LatticeSpec {
  LatticeKind kind = LatticeKind::hexagonal;
  double spacing = 1.0;  ///< lattice constant epsilon
  double extent = 1.0;   ///< radius of the disc region around the patch centre
};

/// Unit neighbour offsets of the lattice kind, counter-clockwise, k = 0..5.
std::array<Vec2, 6> lattice_offsets(LatticeKind kind);

/// Structured patch around `centre`. For the hexagonal kind every lattice node
/// within `extent` of the centre is kept together with all lattice triangles
/// whose vertices are kept; interior nodes see neighbours at spacing*sigma_k.
/// The skew offsets do not tile the plane, so the skew kind yields the single
/// star of six triangles around the centre.
TriangleMesh build_hexagonal_patch(const LatticeSpec& spec, const Vec2& centre = Vec2::Zero());

struct SquareDomain {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool operator==(const SquareDomain&) const = default;
};
struct DiscDomain {
  double radius = 1.0;
  bool operator==(const DiscDomain&) const = default;
};
/// The quadrant {x >= 0, y >= 0, |x| <= radius}; nodes on the axes get line
/// constraints along the axis, the corner node is fixed.
struct QuarterDiscDomain {
  double radius = 1.0;
  bool operator==(const QuarterDiscDomain&) const = default;
};
using Domain = std::variant<SquareDomain, DiscDomain, QuarterDiscDomain>;

double domain_diameter(const Domain& domain);
std::string describe(const Domain& domain);

/// Hexagonal lattice clipped to the domain plus boundary nodes placed on the
/// exact boundary, triangulated by Delaunay. Every edge is at most h_max.
TriangleMesh build_domain_mesh(const Domain& domain, double h_max);

/// Delaunay triangulation (counter-clockwise) of a planar point set. The point
/// set's convex hull is the triangulated region.
std::vector<TriangleMesh::Triangle> delaunay_triangulate(const std::vector<Vec2>& points);

/// Human-readable list of invariant violations; empty iff the mesh is valid.
std::vector<std::string> validate(const TriangleMesh& mesh);

/// Plain-text mesh format: `L M`, L lines `x y tag`, M lines `i0 i1 i2`.
/// Tags: `f` free, `lx`/`ly` axis lines, `c` clamped (fixed).
void write_mesh(std::ostream& out, const TriangleMesh& mesh);
TriangleMesh read_mesh(std::istream& in);

}  // namespace lagflow
