#pragma once

#include <algorithm>
#include <cmath>

#include "d2d/grid.hpp"

namespace testing {

inline double rel_error(double got, double want) {
  const double scale = std::max(std::abs(want), 1e-300);
  return got == want ? 0.0 : std::abs(got - want) / scale;
}

/// Largest elementwise relative error; +inf on shape mismatch. Cells where
/// the reference is exactly zero must match to `zero_abs`.
inline double max_rel_error(const d2d::Grid<double>& got, const d2d::Grid<double>& want,
                            double zero_abs = 1e-12) {
  if (!got.same_shape(want)) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double g = got.values()[i], w = want.values()[i];
    if (w == 0.0) {
      if (std::abs(g) > zero_abs) return INFINITY;
      continue;
    }
    worst = std::max(worst, rel_error(g, w));
  }
  return worst;
}

}  // namespace testing
