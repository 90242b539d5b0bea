#pragma once

#include <array>

namespace d2d {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Row-major 3x3 planar homography.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return {}; }
  static Homography translation(double tx, double ty) {
    return {{1, 0, tx, 0, 1, ty, 0, 0, 1}};
  }

  double operator()(int r, int c) const { return m[r * 3 + c]; }
  double determinant() const;
  Homography inverse() const;
  Homography operator*(const Homography& rhs) const;
};

/// Maps p through h and dehomogenizes. Throws a Degenerate error when the
/// homogeneous coordinate is below 1e-12 in magnitude.
Point2 project(const Homography& h, Point2 p);

}  // namespace d2d
