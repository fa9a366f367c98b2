#include "cm/data/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cm::data {
namespace {

void append_square_teeth(std::vector<Vec2>& curve, int count, double base_height, double y0,
                         double width, geom::Rng& rng) {
  const double period = width / count;
  for (int k = 0; k < count; ++k) {
    const double h = base_height * rng.uniform(0.8, 1.2);
    const double margin = period * rng.uniform(0.2, 0.3);
    const double x0 = k * period + margin;
    const double x1 = (k + 1) * period - margin;
    curve.push_back({x0, y0});
    curve.push_back({x0, y0 + h});
    curve.push_back({x1, y0 + h});
    curve.push_back({x1, y0});
  }
}

void append_triangular_teeth(std::vector<Vec2>& curve, int count, double base_height, double y0,
                             double width, geom::Rng& rng) {
  const double period = width / count;
  for (int k = 0; k < count; ++k) {
    const double h = base_height * rng.uniform(0.8, 1.2);
    const double apex = (k + 0.5 + rng.uniform(-0.1, 0.1)) * period;
    curve.push_back({apex, y0 + h});
    curve.push_back({(k + 1) * period, y0});
  }
}

void append_semicircular_teeth(std::vector<Vec2>& curve, int count, double base_height, double y0,
                               double width, geom::Rng& rng) {
  constexpr int kArcSegments = 8;
  const double period = width / count;
  for (int k = 0; k < count; ++k) {
    const double r = std::min(base_height * rng.uniform(0.8, 1.2), 0.45 * period);
    const double cx = (k + 0.5) * period;
    for (int s = 0; s <= kArcSegments; ++s) {
      const double angle = std::numbers::pi * (1.0 - double(s) / kArcSegments);
      curve.push_back({cx + r * std::cos(angle), y0 + r * std::sin(angle)});
    }
    curve.push_back({(k + 1) * period, y0});
  }
}

std::vector<Vec2> dedupe(const std::vector<Vec2>& pts) {
  std::vector<Vec2> out;
  for (const auto& p : pts) {
    if (out.empty() || (out.back() - p).norm() > 1e-12) out.push_back(p);
  }
  return out;
}

}  // namespace

PlatePolygons make_plate_polygons(int pattern_id, geom::Rng& rng, const ToyParams& params) {
  if (pattern_id < 1 || pattern_id > 6) {
    throw DataError("pattern id must be in [1, 6], got " + std::to_string(pattern_id));
  }
  const double w = params.plate_width;
  const double hh = params.plate_height;
  const double y0 = 0.5 * hh;
  const int count =
      params.teeth_min + int(rng.index(uint64_t(params.teeth_max - params.teeth_min + 1)));
  const double tooth_h = hh * rng.uniform(params.tooth_height_min, params.tooth_height_max);

  std::vector<Vec2> curve;
  curve.push_back({0.0, y0});
  const int family = (pattern_id - 1) % 3 + 1;
  switch (family) {
    case 1: append_square_teeth(curve, count, tooth_h, y0, w, rng); break;
    case 2: append_triangular_teeth(curve, count, tooth_h, y0, w, rng); break;
    default: append_semicircular_teeth(curve, count, tooth_h, y0, w, rng); break;
  }
  curve.push_back({w, y0});
  curve = dedupe(curve);

  if (pattern_id > 3) {
    for (auto& p : curve) p.y() = 2.0 * y0 - p.y();
  }

  PlatePolygons out;
  out.interface = curve;

  out.bottom.push_back({0.0, 0.0});
  out.bottom.push_back({w, 0.0});
  for (auto it = curve.rbegin(); it != curve.rend(); ++it) out.bottom.push_back(*it);
  out.bottom = dedupe(out.bottom);

  out.top = curve;
  out.top.push_back({w, hh});
  out.top.push_back({0.0, hh});
  out.top = dedupe(out.top);
  return out;
}

double polygon_area(const std::vector<Vec2>& poly) {
  double twice = 0.0;
  const int n = int(poly.size());
  for (int i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * twice;
}

bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  bool inside = false;
  const int n = int(poly.size());
  for (int i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x_cross = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

double distance_to_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  double best = std::numeric_limits<double>::infinity();
  const int n = int(poly.size());
  for (int i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (p - (a + s * ab)).norm());
  }
  return best;
}

}  // namespace cm::data
