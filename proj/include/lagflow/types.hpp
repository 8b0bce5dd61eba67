#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lagflow {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Raised for every precondition violation and solver failure in the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Quarter turn J = [[0,-1],[1,0]]; J v rotates v counter-clockwise by 90 degrees.
inline Vec2 quarter_turn(const Vec2& v) { return {-v.y(), v.x()}; }

inline Mat2 quarter_turn_matrix() {
  Mat2 j;
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

/// det(a | b) for column vectors a, b.
inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace lagflow
