#include "cm/data/toy.hpp"

#include <cmath>

#include "cm/geom/core.hpp"

namespace cm::data {
namespace {

// Scale and center the assembled vertex set to unit diameter at the origin.
// The diameter is the maximum pairwise vertex distance of the convex outline,
// which for these prisms is attained at box corners.
void normalize_meshes(std::vector<TriMesh>& parts, TriMesh& plate) {
  Eigen::Index total = plate.vertices.rows();
  double diameter = 0.0;
  for (Eigen::Index i = 0; i < total; ++i) {
    for (Eigen::Index j = i + 1; j < total; ++j) {
      diameter = std::max(diameter, (plate.vertices.row(i) - plate.vertices.row(j)).norm());
    }
  }
  if (diameter <= 0.0) throw DataError("degenerate plate: zero diameter");
  const Vec3 lo = plate.vertices.colwise().minCoeff();
  const Vec3 hi = plate.vertices.colwise().maxCoeff();
  const Vec3 center = 0.5 * (lo + hi);
  const double scale = 1.0 / diameter;
  auto apply = [&](TriMesh& m) {
    m.vertices = (m.vertices.rowwise() - center.transpose()) * scale;
  };
  for (auto& m : parts) apply(m);
  apply(plate);
}

}  // namespace

std::pair<Cloud, RigidTransform> apply_random_pose(const Cloud& points, geom::Rng& rng,
                                                   double range) {
  RigidTransform move;
  move.R = geom::random_rotation(rng);
  for (int a = 0; a < 3; ++a) move.t[a] = rng.uniform(-range, range);
  return {move.apply(points), move.inverse()};
}

ToyMeshes generate_toy_meshes(int pattern_id, uint64_t seed, const ToyParams& params) {
  geom::Rng rng(geom::stream_seed(seed, 0x746f79, uint64_t(pattern_id)));
  ToyMeshes out;
  out.polygons = make_plate_polygons(pattern_id, rng, params);
  const double depth = params.extrude_frac * params.plate_width;
  out.parts.push_back(extrude_polygon(out.polygons.bottom, depth));
  out.parts.push_back(extrude_polygon(out.polygons.top, depth));
  const std::vector<Vec2> rect = {{0.0, 0.0},
                                  {params.plate_width, 0.0},
                                  {params.plate_width, params.plate_height},
                                  {0.0, params.plate_height}};
  out.plate = extrude_polygon(rect, depth);
  normalize_meshes(out.parts, out.plate);
  return out;
}

FracturedObject generate_toy_object(int pattern_id, uint64_t seed, const ToyParams& params) {
  const ToyMeshes meshes = generate_toy_meshes(pattern_id, seed, params);
  geom::Rng rng(geom::stream_seed(seed, 0x73616d70, uint64_t(pattern_id)));
  const auto assembled = sample_fragment_points(meshes.parts, params.point_budget, rng);

  const auto corr = loss::label_correspondences(assembled[0], assembled[1], params.tau);

  FracturedObject obj;
  obj.pattern = pattern_id;
  obj.seed = seed;
  obj.tau = params.tau;
  obj.mating.resize(2);
  obj.mating[0].assign(size_t(assembled[0].rows()), 0);
  obj.mating[1].assign(size_t(assembled[1].rows()), 0);
  for (int i : corr.mating_p) obj.mating[0][size_t(i)] = 1;
  for (int j : corr.mating_q) obj.mating[1][size_t(j)] = 1;

  geom::Rng pose_rng(geom::stream_seed(seed, 0x706f7365, uint64_t(pattern_id)));
  for (const Cloud& cloud : assembled) {
    auto [posed, gt] = apply_random_pose(cloud, pose_rng, params.translation_range);
    obj.parts.push_back(std::move(posed));
    obj.gt_poses.push_back(gt);
  }
  return obj;
}

loss::CorrespondenceSet object_correspondences(const FracturedObject& obj) {
  return loss::label_correspondences(obj.assembled(0), obj.assembled(1), obj.tau);
}

}  // namespace cm::data
