#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "lagflow/mesh.hpp"

namespace lagflow {

namespace {

std::string constraint_tag(const NodeConstraint& c) {
  switch (c.kind) {
    case NodeConstraint::Kind::free:
      return "f";
    case NodeConstraint::Kind::fixed:
      return "c";
    case NodeConstraint::Kind::line:
      if (c.direction.y() == 0.0) return "lx";
      if (c.direction.x() == 0.0) return "ly";
      break;
  }
  throw Error("mesh export supports only axis-aligned line constraints");
}

NodeConstraint parse_tag(const std::string& tag, int line) {
  if (tag == "f") return NodeConstraint::free_node();
  if (tag == "lx") return NodeConstraint::line({1.0, 0.0});
  if (tag == "ly") return NodeConstraint::line({0.0, 1.0});
  if (tag == "c") return NodeConstraint::fixed_node();
  throw Error("mesh line " + std::to_string(line) + ": unknown node tag '" + tag + "'");
}

}  // namespace

void write_mesh(std::ostream& out, const TriangleMesh& mesh) {
  char buf[128];
  out << mesh.num_nodes() << ' ' << mesh.num_triangles() << '\n';
  for (int l = 0; l < mesh.num_nodes(); ++l) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g ", mesh.node(l).x(), mesh.node(l).y());
    out << buf << constraint_tag(mesh.constraint(l)) << '\n';
  }
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

TriangleMesh read_mesh(std::istream& in) {
  std::string text;
  int line_no = 0;
  auto next_line = [&]() -> std::istringstream {
    while (std::getline(in, text)) {
      ++line_no;
      if (text.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(text);
    }
    throw Error("mesh file truncated after line " + std::to_string(line_no));
  };

  int L = 0, M = 0;
  {
    auto ls = next_line();
    if (!(ls >> L >> M) || L <= 0 || M <= 0) throw Error("mesh line 1: expected header `L M`");
  }
  std::vector<Vec2> nodes(L);
  std::vector<NodeConstraint> constraints(L);
  for (int l = 0; l < L; ++l) {
    auto ls = next_line();
    std::string tag;
    if (!(ls >> nodes[l].x() >> nodes[l].y() >> tag))
      throw Error("mesh line " + std::to_string(line_no) + ": expected `x y tag`");
    constraints[l] = parse_tag(tag, line_no);
  }
  std::vector<TriangleMesh::Triangle> tris(M);
  for (int m = 0; m < M; ++m) {
    auto ls = next_line();
    if (!(ls >> tris[m][0] >> tris[m][1] >> tris[m][2]))
      throw Error("mesh line " + std::to_string(line_no) + ": expected `i0 i1 i2`");
  }
  return TriangleMesh(std::move(nodes), std::move(tris), std::move(constraints));
}

}  // namespace lagflow
