#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gfflab/events.hpp"
#include "gfflab/field.hpp"
#include "gfflab/metric.hpp"

namespace gfflab {

struct SvgOverlay {
  std::vector<GoodAnnulus> circles;
  std::vector<PathRecord> paths;
  /// Draws the square grid eps (Z^2 + theta) when eps > 0.
  double grid_eps = 0.0;
  Point grid_theta = Point::Zero();
};

/// Heatmap of the field (blue low, red high) with circles, paths and an
/// optional square grid drawn on top. Deterministic output.
std::string render_svg(const FieldSample& field, const SvgOverlay& overlay = {});

}  // namespace gfflab
