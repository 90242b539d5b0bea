#include "d2d/homography.hpp"

#include <cmath>

#include "d2d/error.hpp"

namespace d2d {

double Homography::determinant() const {
  const auto& a = m;
  return a[0] * (a[4] * a[8] - a[5] * a[7]) -
         a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Homography Homography::inverse() const {
  const double det = determinant();
  if (std::abs(det) <= 1e-12) fail(ErrorKind::Degenerate, "homography is singular");
  const auto& a = m;
  Homography inv;
  inv.m = {(a[4] * a[8] - a[5] * a[7]) / det, (a[2] * a[7] - a[1] * a[8]) / det,
           (a[1] * a[5] - a[2] * a[4]) / det, (a[5] * a[6] - a[3] * a[8]) / det,
           (a[0] * a[8] - a[2] * a[6]) / det, (a[2] * a[3] - a[0] * a[5]) / det,
           (a[3] * a[7] - a[4] * a[6]) / det, (a[1] * a[6] - a[0] * a[7]) / det,
           (a[0] * a[4] - a[1] * a[3]) / det};
  return inv;
}

Homography Homography::operator*(const Homography& rhs) const {
  Homography out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += m[r * 3 + k] * rhs.m[k * 3 + c];
      out.m[r * 3 + c] = s;
    }
  }
  return out;
}

Point2 project(const Homography& h, Point2 p) {
  const double x = h.m[0] * p.x + h.m[1] * p.y + h.m[2];
  const double y = h.m[3] * p.x + h.m[4] * p.y + h.m[5];
  const double w = h.m[6] * p.x + h.m[7] * p.y + h.m[8];
  if (std::abs(w) < 1e-12) fail(ErrorKind::Degenerate, "projection at infinity");
  return {x / w, y / w};
}

}  // namespace d2d
