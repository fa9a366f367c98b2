#pragma once

#include <array>
#include <vector>

#include "cm/data/patterns.hpp"
#include "cm/geom/rng.hpp"
#include "cm/geom/types.hpp"

namespace cm::data {

struct TriMesh {
  Cloud vertices;  // (v x 3)
  std::vector<std::array<int, 3>> triangles;
};

// Ear clipping for a simple counterclockwise polygon. Collinear runs are
// tolerated; triangles below the area floor are dropped from the output.
std::vector<std::array<int, 3>> triangulate_polygon(const std::vector<Vec2>& poly);

// Prism over the polygon: bottom face at z = 0, top face at z = depth, one
// quad (two triangles) per boundary edge.
TriMesh extrude_polygon(const std::vector<Vec2>& poly, double depth);

double mesh_area(const TriMesh& mesh);

Cloud sample_mesh_surface(const TriMesh& mesh, int count, geom::Rng& rng);

// Splits a shared budget across parts proportionally to surface area, using
// largest-remainder rounding so the counts sum to the budget exactly, then
// samples each part. Throws DataError on a zero-area mesh.
std::vector<Cloud> sample_fragment_points(const std::vector<TriMesh>& parts, int total_budget,
                                          geom::Rng& rng);

std::vector<int> area_weighted_counts(const std::vector<double>& areas, int total_budget);

}  // namespace cm::data
