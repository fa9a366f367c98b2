#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cm/data/mesh.hpp"
#include "cm/data/object_io.hpp"
#include "cm/data/patterns.hpp"
#include "cm/data/ply.hpp"
#include "cm/data/toy.hpp"
#include "cm/geom/core.hpp"

using namespace cm;
using namespace cm::data;

namespace {

std::filesystem::path temp_dir(const char* tag) {
  auto dir = std::filesystem::temp_directory_path() / (std::string("cm_test_") + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

bool clouds_identical(const Cloud& a, const Cloud& b) {
  return a.rows() == b.rows() && (a - b).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

TEST_CASE("polygon utilities") {
  const std::vector<Vec2> square = {{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  CHECK(polygon_area(square) == doctest::Approx(4.0));
  CHECK(point_in_polygon({1.0, 1.0}, square));
  CHECK_FALSE(point_in_polygon({3.0, 1.0}, square));
  CHECK(distance_to_polygon({1.0, 1.0}, square) == doctest::Approx(1.0));
  CHECK(distance_to_polygon({3.0, 1.0}, square) == doctest::Approx(1.0));
}

TEST_CASE("triangulation covers the polygon exactly") {
  geom::Rng rng(7);
  ToyParams params;
  for (int pattern = 1; pattern <= 6; ++pattern) {
    auto polys = make_plate_polygons(pattern, rng, params);
    for (const auto* poly : {&polys.bottom, &polys.top}) {
      const auto tris = triangulate_polygon(*poly);
      double covered = 0.0;
      for (const auto& t : tris) {
        const Vec2 a = (*poly)[size_t(t[0])];
        const Vec2 b = (*poly)[size_t(t[1])];
        const Vec2 c = (*poly)[size_t(t[2])];
        const double area = 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
        CHECK(area > 0.0);
        covered += area;
      }
      CHECK(covered == doctest::Approx(polygon_area(*poly)).epsilon(1e-9));
    }
  }
}

TEST_CASE("part polygons partition the plate") {
  geom::Rng rng(11);
  ToyParams params;
  for (int pattern = 1; pattern <= 6; ++pattern) {
    auto polys = make_plate_polygons(pattern, rng, params);
    const double plate_area = params.plate_width * params.plate_height;
    CHECK(polygon_area(polys.bottom) + polygon_area(polys.top) ==
          doctest::Approx(plate_area).epsilon(1e-9));

    geom::Rng sampler(13);
    int checked = 0;
    while (checked < 200) {
      const Vec2 p{sampler.uniform(0.0, params.plate_width),
                   sampler.uniform(0.0, params.plate_height)};
      const bool in_bottom = point_in_polygon(p, polys.bottom);
      const bool in_top = point_in_polygon(p, polys.top);
      if (distance_to_polygon(p, polys.bottom) < 1e-3 ||
          distance_to_polygon(p, polys.top) < 1e-3) {
        continue;  // boundary points are ambiguous under either test
      }
      CHECK(in_bottom != in_top);
      ++checked;
    }
  }
}

TEST_CASE("extrusion produces a closed prism with the expected area") {
  const std::vector<Vec2> square = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const TriMesh prism = extrude_polygon(square, 0.5);
  CHECK(prism.vertices.rows() == 8);
  // two faces of area 1 plus four walls of area 0.5
  CHECK(mesh_area(prism) == doctest::Approx(4.0));
  CHECK_THROWS_AS(extrude_polygon(square, 0.0), DataError);
}

TEST_CASE("area weighted counts use largest remainders") {
  SUBCASE("3:1 split") {
    const auto counts = area_weighted_counts({3.0, 1.0}, 5000);
    CHECK(counts[0] == 3750);
    CHECK(counts[1] == 1250);
  }
  SUBCASE("counts always sum to the budget") {
    geom::Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> areas;
      for (int i = 0; i < 5; ++i) areas.push_back(rng.uniform(0.1, 9.0));
      const auto counts = area_weighted_counts(areas, 1024);
      int sum = 0;
      for (int c : counts) sum += c;
      CHECK(sum == 1024);
    }
  }
  SUBCASE("remainder ties break toward the lower index") {
    const auto counts = area_weighted_counts({1.0, 1.0}, 3);
    CHECK(counts[0] == 2);
    CHECK(counts[1] == 1);
  }
  CHECK_THROWS_AS(area_weighted_counts({0.0, 0.0}, 10), DataError);
}

TEST_CASE("surface sampling stays on the mesh") {
  const std::vector<Vec2> square = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const TriMesh prism = extrude_polygon(square, 0.5);
  geom::Rng rng(17);
  const Cloud pts = sample_mesh_surface(prism, 500, rng);
  CHECK(pts.rows() == 500);
  int on_boundary = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double x = pts(i, 0), y = pts(i, 1), z = pts(i, 2);
    CHECK(x >= -1e-12);
    CHECK(x <= 1.0 + 1e-12);
    CHECK(y >= -1e-12);
    CHECK(y <= 1.0 + 1e-12);
    CHECK(z >= -1e-12);
    CHECK(z <= 0.5 + 1e-12);
    const double face = std::min({std::abs(z), std::abs(z - 0.5), std::abs(x), std::abs(x - 1.0),
                                  std::abs(y), std::abs(y - 1.0)});
    if (face < 1e-12) ++on_boundary;
  }
  CHECK(on_boundary == 500);

  TriMesh empty;
  empty.vertices.resize(0, 3);
  CHECK_THROWS_AS(sample_mesh_surface(empty, 10, rng), DataError);
}

TEST_CASE("toy objects are deterministic in pattern and seed") {
  ToyParams params;
  params.point_budget = 256;
  const FracturedObject a = generate_toy_object(2, 42, params);
  const FracturedObject b = generate_toy_object(2, 42, params);
  REQUIRE(a.parts.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(clouds_identical(a.parts[size_t(i)], b.parts[size_t(i)]));
    CHECK(a.mating[size_t(i)] == b.mating[size_t(i)]);
    CHECK((a.gt_poses[size_t(i)].R - b.gt_poses[size_t(i)].R).cwiseAbs().maxCoeff() == 0.0);
  }
  const FracturedObject c = generate_toy_object(2, 43, params);
  CHECK_FALSE(clouds_identical(a.parts[0], c.parts[0]));
}

TEST_CASE("toy object geometry invariants") {
  ToyParams params;
  geom::Rng seed_rng(23);
  for (int pattern : {1, 4}) {
    const uint64_t seed = seed_rng.bits();
    const ToyMeshes meshes = generate_toy_meshes(pattern, seed, params);

    // unit diameter, centered
    double diameter = 0.0;
    Cloud all(meshes.plate.vertices.rows(), 3);
    all = meshes.plate.vertices;
    for (Eigen::Index i = 0; i < all.rows(); ++i)
      for (Eigen::Index j = i + 1; j < all.rows(); ++j)
        diameter = std::max(diameter, (all.row(i) - all.row(j)).norm());
    CHECK(diameter == doctest::Approx(1.0).epsilon(1e-12));
    const Vec3 center = 0.5 * (all.colwise().minCoeff() + all.colwise().maxCoeff()).transpose();
    CHECK(center.norm() < 1e-12);

    // reassembly: the two fragments together sample to the original plate
    geom::Rng rng(geom::stream_seed(seed, 1));
    const auto frag_pts = sample_fragment_points(meshes.parts, 2048, rng);
    Cloud united(frag_pts[0].rows() + frag_pts[1].rows(), 3);
    united << frag_pts[0], frag_pts[1];
    const Cloud plate_pts = sample_mesh_surface(meshes.plate, 2048, rng);
    CHECK(geom::chamfer_distance(united, plate_pts) < 1e-3);
  }
}

TEST_CASE("fragment interiors do not overlap") {
  ToyParams params;
  for (int pattern = 1; pattern <= 6; ++pattern) {
    const ToyMeshes meshes = generate_toy_meshes(pattern, uint64_t(100 + pattern), params);
    const auto& bottom = meshes.polygons.bottom;
    const auto& top = meshes.polygons.top;
    geom::Rng rng(5);
    int checked = 0;
    while (checked < 300) {
      const Vec2 p{rng.uniform(0.0, params.plate_width), rng.uniform(0.0, params.plate_height)};
      if (!point_in_polygon(p, bottom)) continue;
      if (distance_to_polygon(p, top) < 1e-3) continue;
      CHECK_FALSE(point_in_polygon(p, top));
      ++checked;
    }
  }
}

TEST_CASE("gt poses undo the scramble") {
  ToyParams params;
  params.point_budget = 256;
  const FracturedObject obj = generate_toy_object(3, 7, params);
  const ToyMeshes meshes = generate_toy_meshes(3, 7, params);
  geom::Rng rng(geom::stream_seed(7, 0x73616d70, 3));
  const auto assembled = sample_fragment_points(meshes.parts, params.point_budget, rng);
  for (int i = 0; i < 2; ++i) {
    const Cloud back = obj.assembled(i);
    CHECK((back - assembled[size_t(i)]).cwiseAbs().maxCoeff() < 1e-12);
  }
  // scrambled parts really moved
  CHECK((obj.parts[0] - assembled[0]).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("mating flags match recomputed correspondences") {
  ToyParams params;
  params.point_budget = 512;
  const FracturedObject obj = generate_toy_object(1, 99, params);
  const auto corr = object_correspondences(obj);
  CHECK_FALSE(corr.positives.empty());
  std::vector<uint8_t> flags_p(size_t(obj.parts[0].rows()), 0);
  std::vector<uint8_t> flags_q(size_t(obj.parts[1].rows()), 0);
  for (int i : corr.mating_p) flags_p[size_t(i)] = 1;
  for (int j : corr.mating_q) flags_q[size_t(j)] = 1;
  CHECK(flags_p == obj.mating[0]);
  CHECK(flags_q == obj.mating[1]);

  // positives really are within tau in the assembled frame
  const Cloud ap = obj.assembled(0);
  const Cloud aq = obj.assembled(1);
  for (const auto& [i, j] : corr.positives) {
    CHECK((ap.row(i) - aq.row(j)).norm() <= obj.tau + 1e-15);
  }
}

TEST_CASE("random poses stay in range and invert exactly") {
  geom::Rng rng(31);
  Cloud pts(64, 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    for (int a = 0; a < 3; ++a) pts(i, a) = rng.uniform(-0.5, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto [posed, gt] = apply_random_pose(pts, rng, 0.5);
    CHECK(is_rotation(gt.R));
    CHECK((gt.apply(posed) - pts).cwiseAbs().maxCoeff() < 1e-12);
    const RigidTransform forward = gt.inverse();
    CHECK(forward.t.cwiseAbs().maxCoeff() <= 0.5);
  }
}

TEST_CASE("ply round trip is bitwise") {
  const auto dir = temp_dir("ply");
  geom::Rng rng(41);
  Cloud pts(33, 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    for (int a = 0; a < 3; ++a) pts(i, a) = rng.normal() * std::pow(10.0, rng.uniform(-8, 4));
  std::vector<uint8_t> mating(33, 0);
  for (size_t i = 0; i < mating.size(); i += 3) mating[i] = 1;

  write_ply(dir / "a.ply", pts, mating);
  const PlyCloud back = read_ply(dir / "a.ply");
  CHECK(clouds_identical(back.points, pts));
  CHECK(back.mating == mating);
}

TEST_CASE("ply parse errors name the line") {
  const auto dir = temp_dir("plyerr");

  SUBCASE("truncated body") {
    std::ofstream out(dir / "t.ply");
    out << "ply\nformat ascii 1.0\nelement vertex 3\nproperty double x\nproperty double y\n"
           "property double z\nproperty uchar mating\nend_header\n0 0 0 0\n";
    out.close();
    try {
      read_ply(dir / "t.ply");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      const std::string what = e.what();
      CHECK(what.find("line 10") != std::string::npos);
      CHECK(what.find("truncated") != std::string::npos);
    }
  }
  SUBCASE("bad magic") {
    std::ofstream out(dir / "m.ply");
    out << "plyx\n";
    out.close();
    try {
      read_ply(dir / "m.ply");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
  }
  SUBCASE("bad vertex line") {
    std::ofstream out(dir / "v.ply");
    out << "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\n"
           "property double z\nproperty uchar mating\nend_header\n0 0 nope 0\n";
    out.close();
    CHECK_THROWS_AS(read_ply(dir / "v.ply"), ParseError);
  }
}

TEST_CASE("object save and load round trip") {
  const auto dir = temp_dir("obj");
  ToyParams params;
  params.point_budget = 128;
  const FracturedObject obj = generate_toy_object(5, 1234, params);
  save_object(dir / "o1", obj);
  const FracturedObject back = load_object(dir / "o1");
  CHECK(back.pattern == obj.pattern);
  CHECK(back.seed == obj.seed);
  CHECK(back.tau == obj.tau);
  REQUIRE(back.parts.size() == obj.parts.size());
  for (size_t i = 0; i < obj.parts.size(); ++i) {
    CHECK(clouds_identical(back.parts[i], obj.parts[i]));
    CHECK(back.mating[i] == obj.mating[i]);
    CHECK((back.gt_poses[i].R - obj.gt_poses[i].R).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.gt_poses[i].t - obj.gt_poses[i].t).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(load_object(dir / "missing"), DataError);
}

TEST_CASE("split generation lays out 900 objects with disjoint test patterns") {
  const auto dir = temp_dir("split");
  SplitConfig cfg;
  cfg.toy.point_budget = 64;  // keep the unit test quick
  cfg.train_per_pattern = 4;
  cfg.val_per_pattern = 2;
  cfg.test_per_pattern = 3;
  cfg.master_seed = 7;
  const DatasetManifest manifest = generate_toy_split(cfg, dir);

  CHECK(manifest.objects.size() == size_t(3 * (4 + 2 + 3)));
  CHECK(manifest.split("train").size() == 12);
  CHECK(manifest.split("val").size() == 6);
  CHECK(manifest.split("test").size() == 9);

  std::set<int> train_patterns, test_patterns;
  std::set<uint64_t> seeds;
  for (const auto& e : manifest.objects) {
    seeds.insert(e.seed);
    if (e.split == "test") {
      test_patterns.insert(e.pattern);
    } else {
      train_patterns.insert(e.pattern);
    }
  }
  CHECK(train_patterns == std::set<int>{1, 2, 3});
  CHECK(test_patterns == std::set<int>{4, 5, 6});
  CHECK(seeds.size() == manifest.objects.size());

  const DatasetManifest loaded = load_manifest(dir);
  CHECK(loaded.objects.size() == manifest.objects.size());
  CHECK(loaded.master_seed == manifest.master_seed);
  CHECK(loaded.point_budget == manifest.point_budget);

  const FracturedObject obj = load_entry(dir, loaded.objects[3]);
  CHECK(obj.pattern == loaded.objects[3].pattern);
  CHECK(obj.parts[0].rows() + obj.parts[1].rows() == 64);

  // regeneration is bitwise identical
  const auto dir2 = temp_dir("split2");
  const DatasetManifest manifest2 = generate_toy_split(cfg, dir2);
  for (size_t k : {size_t(0), size_t(10), size_t(20)}) {
    const FracturedObject a = load_entry(dir, manifest.objects[k]);
    const FracturedObject b = load_entry(dir2, manifest2.objects[k]);
    CHECK(clouds_identical(a.parts[0], b.parts[0]));
    CHECK(clouds_identical(a.parts[1], b.parts[1]));
  }
}

TEST_CASE("point budget is honored exactly") {
  ToyParams params;
  for (int budget : {64, 257, 1024}) {
    params.point_budget = budget;
    const FracturedObject obj = generate_toy_object(2, 5, params);
    CHECK(obj.parts[0].rows() + obj.parts[1].rows() == budget);
  }
}
