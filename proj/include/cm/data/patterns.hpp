#pragma once

#include <vector>

#include "cm/geom/rng.hpp"
#include "cm/geom/types.hpp"

namespace cm::data {

using Vec2 = Eigen::Vector2d;

struct ToyParams {
  double plate_width = 1.0;
  double plate_height = 0.6;
  double extrude_frac = 0.2;  // depth as a fraction of width
  int teeth_min = 4;
  int teeth_max = 8;
  double tooth_height_min = 0.05;  // fraction of plate height
  double tooth_height_max = 0.15;
  int point_budget = 1024;
  double tau = 0.018;
  double translation_range = 0.5;
};

struct PlatePolygons {
  std::vector<Vec2> bottom;  // counterclockwise
  std::vector<Vec2> top;
  std::vector<Vec2> interface;  // left to right, both endpoints on the plate edge
};

// Splits the plate rectangle along a toothed interface. Patterns 1-3 grow
// square, triangular, and semicircular teeth upward out of the bottom part;
// patterns 4-6 are their occupancy-inverted twins (the same curve mirrored,
// teeth biting downward). Tooth count and heights jitter with the seed.
PlatePolygons make_plate_polygons(int pattern_id, geom::Rng& rng, const ToyParams& params);

double polygon_area(const std::vector<Vec2>& poly);
bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly);
double distance_to_polygon(const Vec2& p, const std::vector<Vec2>& poly);

}  // namespace cm::data
