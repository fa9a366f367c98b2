#include <doctest.h>

#include <cmath>

#include "cm/geom/core.hpp"
#include "cm/match/sinkhorn.hpp"
#include "cm/oracle/oracles.hpp"

using namespace cm;

namespace {

Mat random_mat(geom::Rng& rng, int r, int c) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

Cloud random_cloud(geom::Rng& rng, int n) {
  Cloud c(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) = rng.normal();
  return c;
}

}  // namespace

TEST_CASE("search oracle recovers the identity exactly") {
  geom::Rng rng(61);
  Cloud src = random_cloud(rng, 4);
  auto out = oracle::oracle_kabsch(src, src, Vec::Ones(4));
  CHECK((out.R - Mat3::Identity()).norm() < 1e-6);
  CHECK(out.t.norm() < 1e-6);
}

TEST_CASE("search oracle ignores zero-weight points") {
  geom::Rng rng(62);
  Cloud src = random_cloud(rng, 4);
  Mat3 r = geom::random_rotation(rng);
  Vec3 t(0.3, -0.2, 0.9);
  Cloud tgt = src * r.transpose();
  tgt.rowwise() += t.transpose();

  Vec w = Vec::Ones(4);
  w(3) = 0.0;
  Cloud corrupted = tgt;
  corrupted.row(3) += Eigen::RowVector3d(5, -7, 11);

  auto clean = oracle::oracle_kabsch(src, tgt, w);
  auto noisy = oracle::oracle_kabsch(src, corrupted, w);
  CHECK((clean.R - noisy.R).norm() < 1e-6);
  CHECK((clean.t - noisy.t).norm() < 1e-6);
  CHECK(geom::rotation_angle_deg(clean.R, r) < 1e-3);

  CHECK_THROWS_AS(oracle::oracle_kabsch(random_cloud(rng, 6), random_cloud(rng, 6), Vec::Ones(6)),
                  ShapeMismatch);
}

TEST_CASE("search oracle agrees with the production solver") {
  geom::Rng rng(63);
  for (int trial = 0; trial < 5; ++trial) {
    Cloud src = random_cloud(rng, 4);
    Mat3 r = geom::random_rotation(rng);
    Cloud tgt = src * r.transpose();
    tgt.rowwise() += Eigen::RowVector3d(rng.normal(), rng.normal(), rng.normal());
    for (int i = 0; i < 4; ++i) tgt.row(i) += 0.01 * Eigen::RowVector3d(rng.normal(), rng.normal(), rng.normal());
    Vec w(4);
    for (int i = 0; i < 4; ++i) w(i) = rng.uniform(0.2, 2.0);

    auto prod = geom::weighted_kabsch(src, tgt, w);
    auto ref = oracle::oracle_kabsch(src, tgt, w);
    CHECK(geom::rotation_angle_deg(prod.transform.R, ref.R) < 0.5);
    CHECK((prod.transform.t - ref.t).norm() < 1e-3);
  }
}

TEST_CASE("extended precision assignment nails its marginals") {
  geom::Rng rng(64);
  Mat c = random_mat(rng, 6, 9);
  Mat z = oracle::oracle_assignment(c, 0.8, 10000);
  for (int i = 0; i < 6; ++i) CHECK(std::abs(z.row(i).sum() - 1.0) < 1e-10);
  for (int j = 0; j < 9; ++j) CHECK(std::abs(z.col(j).sum() - 1.0) < 1e-10);

  SUBCASE("production sinkhorn lands within 1e-4") {
    ad::Graph g;
    ad::Var la = match::sinkhorn_log_assignment(g, g.constant(c), g.scalar(0.8), 100);
    Mat zp = g.value(la).array().exp();
    CHECK((zp - z).cwiseAbs().maxCoeff() < 1e-4);
  }
  SUBCASE("uniform costs stay symmetric") {
    Mat zu = oracle::oracle_assignment(Mat::Constant(2, 2, 0.1), 0.1, 2000);
    CHECK(std::abs(zu(0, 0) - zu(1, 1)) < 1e-12);
    CHECK(std::abs(zu(0, 1) - zu(1, 0)) < 1e-12);
  }
}

TEST_CASE("neighbor oracles replay the production rules") {
  geom::Rng rng(65);
  Cloud c = random_cloud(rng, 60);
  CHECK(oracle::oracle_knn(c, 5) == geom::knn_graph(c, 5));
  CHECK(oracle::oracle_fps(c, 20) == geom::farthest_point_sample(c, 20));
}
