#include <doctest.h>

#include <algorithm>
#include <set>

#include "cm/geom/core.hpp"
#include "cm/geom/rng.hpp"

using namespace cm;
using namespace cm::geom;

namespace {

Cloud random_cloud(Rng& rng, int n, double scale = 1.0) {
  Cloud c(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) = rng.normal() * scale;
  return c;
}

}  // namespace

TEST_CASE("gram_schmidt_frame basics") {
  Mat3 f = gram_schmidt_frame(Vec3(2, 0, 0), Vec3(1, 3, 0));
  CHECK(f.row(0).isApprox(Eigen::RowVector3d(1, 0, 0), 1e-12));
  CHECK(f.row(1).isApprox(Eigen::RowVector3d(0, 1, 0), 1e-12));
  CHECK(f.row(2).isApprox(Eigen::RowVector3d(0, 0, 1), 1e-12));

  Rng rng(7);
  for (int it = 0; it < 50; ++it) {
    Vec3 u, v;
    for (int i = 0; i < 3; ++i) {
      u(i) = rng.normal();
      v(i) = rng.normal();
    }
    Mat3 g = gram_schmidt_frame(u, v);
    CHECK(is_rotation(g));
    CHECK(std::abs(g.determinant() - 1.0) < 1e-12);
  }

  CHECK_THROWS_AS(gram_schmidt_frame(Vec3(1e-9, 0, 0), Vec3(0, 1, 0)), DegenerateInput);
  CHECK_THROWS_AS(gram_schmidt_frame(Vec3(1, 0, 0), Vec3(2, 1e-9, 0)), DegenerateInput);
}

TEST_CASE("weighted_kabsch recovers a known transform") {
  Rng rng(11);
  for (int it = 0; it < 20; ++it) {
    Cloud src = random_cloud(rng, 30);
    Mat3 r = random_rotation(rng);
    Vec3 t(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    Cloud tgt = (src * r.transpose()).rowwise() + t.transpose();
    Vec w = Vec::Ones(30);
    auto res = weighted_kabsch(src, tgt, w);
    CHECK(!res.degenerate);
    CHECK((res.transform.R - r).norm() < 1e-9);
    CHECK((res.transform.t - t).norm() < 1e-9);
  }
}

TEST_CASE("weighted_kabsch ignores zero-weight outliers") {
  Rng rng(13);
  Cloud src = random_cloud(rng, 20);
  Mat3 r = random_rotation(rng);
  Vec3 t(0.3, -0.2, 0.9);
  Cloud tgt = (src * r.transpose()).rowwise() + t.transpose();
  tgt.row(4) << 100, 100, 100;
  tgt.row(15) << -50, 20, 7;
  Vec w = Vec::Ones(20);
  w(4) = 0.0;
  w(15) = 0.0;
  auto res = weighted_kabsch(src, tgt, w);
  CHECK((res.transform.R - r).norm() < 1e-9);
  CHECK((res.transform.t - t).norm() < 1e-9);
}

TEST_CASE("weighted_kabsch local optimality against perturbations") {
  Rng rng(17);
  Cloud src = random_cloud(rng, 12);
  Cloud tgt = random_cloud(rng, 12);
  Vec w(12);
  for (int i = 0; i < 12; ++i) w(i) = rng.uniform(0.1, 2.0);
  auto res = weighted_kabsch(src, tgt, w);
  auto objective = [&](const Mat3& r, const Vec3& t) {
    double acc = 0;
    for (int i = 0; i < 12; ++i)
      acc += w(i) * ((r * src.row(i).transpose() + t) - tgt.row(i).transpose()).squaredNorm();
    return acc;
  };
  const double best = objective(res.transform.R, res.transform.t);
  for (int it = 0; it < 100; ++it) {
    Mat3 rp = res.transform.R * small_rotation(rng, 5.0);
    Vec3 tp = res.transform.t + 0.05 * Vec3(rng.normal(), rng.normal(), rng.normal());
    CHECK(best <= objective(rp, tp) + 1e-12);
  }
}

TEST_CASE("weighted_kabsch flags degenerate sources") {
  Cloud src(4, 3), tgt(4, 3);
  for (int i = 0; i < 4; ++i) {
    src.row(i) << static_cast<double>(i), 0.0, 0.0;  // collinear
    tgt.row(i) << 0.0, static_cast<double>(i), 2.0;
  }
  auto res = weighted_kabsch(src, tgt, Vec::Ones(4));
  CHECK(res.degenerate);
  CHECK(res.transform.R.isIdentity(1e-12));
  Vec3 shift = tgt.colwise().mean() - src.colwise().mean();
  CHECK((res.transform.t - shift).norm() < 1e-12);
}

TEST_CASE("chamfer_distance definition and symmetry") {
  Cloud a(2, 3), b(2, 3);
  a << 0, 0, 0, 1, 0, 0;
  b << 0, 0, 0, 1, 0, 0;
  CHECK(chamfer_distance(a, b) == doctest::Approx(0.0));

  b << 0, 0.5, 0, 1, 0.5, 0;  // every nearest-neighbor distance is 0.5
  CHECK(chamfer_distance(a, b) == doctest::Approx(0.25));

  Rng rng(23);
  Cloud x = random_cloud(rng, 40);
  Cloud y = random_cloud(rng, 25);
  CHECK(chamfer_distance(x, y) == doctest::Approx(chamfer_distance(y, x)));
  CHECK(chamfer_distance(x, x) == doctest::Approx(0.0));
}

TEST_CASE("farthest_point_sample covers and starts at the extreme point") {
  Rng rng(29);
  Cloud pts = random_cloud(rng, 200);
  const Eigen::RowVector3d centroid = pts.colwise().mean();
  auto sel = farthest_point_sample(pts, 50);
  CHECK(sel.size() == 50);
  std::set<int> uniq(sel.begin(), sel.end());
  CHECK(uniq.size() == 50);

  int expect_start = 0;
  double far = -1;
  for (int i = 0; i < 200; ++i) {
    const double d = (pts.row(i) - centroid).squaredNorm();
    if (d > far) {
      far = d;
      expect_start = i;
    }
  }
  CHECK(sel[0] == expect_start);

  // greedy max-min oracle replay
  Vec dist = (pts.rowwise() - pts.row(sel[0])).rowwise().squaredNorm();
  for (std::size_t s = 1; s < sel.size(); ++s) {
    int arg = 0;
    double fd = -1;
    for (int i = 0; i < 200; ++i)
      if (dist(i) > fd) {
        fd = dist(i);
        arg = i;
      }
    CHECK(sel[s] == arg);
    dist = dist.cwiseMin((pts.rowwise() - pts.row(arg)).rowwise().squaredNorm());
  }
}

TEST_CASE("knn_graph matches brute force") {
  Rng rng(31);
  Cloud pts = random_cloud(rng, 60);
  const int k = 7;
  auto g = knn_graph(pts, k);
  for (int i = 0; i < 60; ++i) {
    std::vector<std::pair<double, int>> all;
    for (int j = 0; j < 60; ++j)
      if (j != i) all.push_back({(pts.row(i) - pts.row(j)).squaredNorm(), j});
    std::sort(all.begin(), all.end());
    for (int s = 0; s < k; ++s) CHECK(g[i][s] == all[s].second);
  }
  CHECK_THROWS_AS(knn_graph(pts, 60), ShapeMismatch);
}

TEST_CASE("random_rotation is a proper rotation and roughly uniform") {
  Rng rng(37);
  Vec3 mean = Vec3::Zero();
  for (int it = 0; it < 500; ++it) {
    Mat3 r = random_rotation(rng);
    CHECK(is_rotation(r, 1e-10));
    mean += r * Vec3(1, 0, 0);
  }
  mean /= 500.0;
  CHECK(mean.norm() < 0.1);  // rotated axis averages out near zero
}

TEST_CASE("rigid transform algebra") {
  Rng rng(41);
  RigidTransform a{random_rotation(rng), Vec3(1, 2, 3)};
  RigidTransform b{random_rotation(rng), Vec3(-0.5, 0.1, 0.7)};
  Vec3 x(0.2, -0.3, 0.4);
  CHECK(((a * b).apply(x) - a.apply(b.apply(x))).norm() < 1e-12);
  CHECK((a.inverse().apply(a.apply(x)) - x).norm() < 1e-12);
}
