#include "gfflab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gfflab {

namespace {

std::string colour(double t) {
  // t in [0, 1]: blue -> white -> red.
  t = std::clamp(t, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    const double s = t / 0.5;
    r = static_cast<int>(std::lround(255 * s));
    g = r;
    b = 255;
  } else {
    const double s = (1.0 - t) / 0.5;
    r = 255;
    g = static_cast<int>(std::lround(255 * s));
    b = g;
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string render_svg(const FieldSample& field, const SvgOverlay& overlay) {
  const GridSpec& spec = field.spec;
  const double cell = std::max(1.0, std::floor(512.0 / std::max(spec.nx, spec.ny)));
  const double width = cell * spec.nx;
  const double height = cell * spec.ny;
  // Screen y grows downwards; lattice j grows upwards.
  auto sx = [&](const Point& p) { return (p.x() - spec.origin.x()) / spec.spacing * cell + cell / 2; };
  auto sy = [&](const Point& p) { return height - ((p.y() - spec.origin.y()) / spec.spacing * cell + cell / 2); };

  const double lo = field.values.minCoeff();
  const double hi = field.values.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;

  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" shape-rendering=\"crispEdges\">\n";
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i)
      os << "<rect x=\"" << i * cell << "\" y=\"" << height - (j + 1) * cell << "\" width=\"" << cell
         << "\" height=\"" << cell << "\" fill=\"" << colour((field.values(i, j) - lo) / span) << "\"/>\n";

  if (overlay.grid_eps > 0.0) {
    const double step = overlay.grid_eps / spec.spacing * cell;
    const double ox = overlay.grid_theta.x() * overlay.grid_eps;
    const double oy = overlay.grid_theta.y() * overlay.grid_eps;
    os << "<g stroke=\"#444\" stroke-width=\"0.5\" fill=\"none\">\n";
    for (double x = sx(spec.origin + Point(ox, 0)); x <= width; x += step)
      os << "<line x1=\"" << x << "\" y1=\"0\" x2=\"" << x << "\" y2=\"" << height << "\"/>\n";
    for (double y = sy(spec.origin + Point(0, oy)); y >= 0; y -= step)
      os << "<line x1=\"0\" y1=\"" << y << "\" x2=\"" << width << "\" y2=\"" << y << "\"/>\n";
    os << "</g>\n";
  }
  for (const auto& c : overlay.circles)
    os << "<circle cx=\"" << sx(c.w) << "\" cy=\"" << sy(c.w) << "\" r=\"" << c.r / spec.spacing * cell
       << "\" fill=\"none\" stroke=\"#111\" stroke-width=\"1\"/>\n";
  for (const auto& path : overlay.paths) {
    os << "<polyline fill=\"none\" stroke=\"#0a0\" stroke-width=\"1.5\" points=\"";
    for (const Vertex& v : path.vertices) {
      const Point p = spec.point(v);
      os << sx(p) << ',' << sy(p) << ' ';
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace gfflab
