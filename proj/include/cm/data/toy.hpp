#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cm/data/mesh.hpp"
#include "cm/data/patterns.hpp"
#include "cm/geom/rng.hpp"
#include "cm/geom/types.hpp"
#include "cm/loss/correspondence.hpp"

namespace cm::data {

// A two-part fractured toy object. Part clouds are stored in their scrambled
// frames; gt_poses[i] maps part i back into the shared assembled frame.
struct FracturedObject {
  int pattern = 0;
  uint64_t seed = 0;
  double tau = 0.018;
  std::vector<Cloud> parts;
  std::vector<RigidTransform> gt_poses;
  std::vector<std::vector<uint8_t>> mating;  // per part, 1 if the point has a positive

  Cloud assembled(int i) const { return gt_poses[size_t(i)].apply(parts[size_t(i)]); }
};

// Haar-random rotation plus a uniform translation in [-range, range]^3.
// Returns the transformed cloud and the pose that undoes the move.
std::pair<Cloud, RigidTransform> apply_random_pose(const Cloud& points, geom::Rng& rng,
                                                   double range = 0.5);

// Builds the plate for the pattern, splits it along the toothed interface,
// extrudes both halves, normalizes the assembled object to unit diameter at
// the origin, samples surface points, labels mating flags, then scrambles
// each part with an independent random pose. Deterministic in (pattern, seed).
FracturedObject generate_toy_object(int pattern_id, uint64_t seed, const ToyParams& params);

// The same construction returned before sampling, for geometric checks.
struct ToyMeshes {
  std::vector<TriMesh> parts;  // assembled frame, normalized
  TriMesh plate;               // the unfractured plate, same normalization
  PlatePolygons polygons;      // source 2d outlines, unnormalized
};
ToyMeshes generate_toy_meshes(int pattern_id, uint64_t seed, const ToyParams& params);

// Ground-truth correspondences for a stored object, recomputed from the
// assembled coordinates.
loss::CorrespondenceSet object_correspondences(const FracturedObject& obj);

}  // namespace cm::data
