#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cm/ad/gradcheck.hpp"
#include "cm/geom/core.hpp"
#include "cm/loss/losses.hpp"
#include "cm/match/sinkhorn.hpp"

using namespace cm;

namespace {

Mat3 rot_z(double deg) {
  return Eigen::AngleAxisd(deg * std::numbers::pi / 180.0, Vec3::UnitZ()).toRotationMatrix();
}

loss::CorrespondenceSet one_anchor_set() {
  loss::CorrespondenceSet corr;
  corr.positives = {{0, 0}};
  corr.mating_p = {0};
  corr.mating_q = {0, 1};
  corr.pos_mask = Mat::Zero(1, 2);
  corr.pos_mask(0, 0) = 1.0;
  corr.neg_mask = Mat::Zero(1, 2);
  corr.neg_mask(0, 1) = 1.0;
  return corr;
}

Mat random_mat(geom::Rng& rng, int r, int c) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("orientation loss measures aligned frame disagreement") {
  std::vector<Mat3> id = {Mat3::Identity()};

  SUBCASE("identical frames cost nothing") {
    CHECK(loss::orientation_loss_value(id, id, Mat3::Identity(), Mat3::Identity(), {{0, 0}}) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("half-turn frames cost 2 sqrt 2") {
    std::vector<Mat3> flipped = {rot_z(180.0)};
    double v =
        loss::orientation_loss_value(id, flipped, Mat3::Identity(), Mat3::Identity(), {{0, 0}});
    CHECK(v == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(v == doctest::Approx(2.8284).epsilon(1e-4));
  }
  SUBCASE("invariant to an extra shared rotation") {
    geom::Rng rng(51);
    std::vector<Mat3> fp, fq;
    for (int i = 0; i < 4; ++i) {
      fp.push_back(geom::random_rotation(rng));
      fq.push_back(geom::random_rotation(rng));
    }
    Mat3 rp = geom::random_rotation(rng), rq = geom::random_rotation(rng);
    Mat3 extra = geom::random_rotation(rng);
    std::vector<std::pair<int, int>> pos = {{0, 1}, {1, 0}, {2, 3}, {3, 2}};
    double base = loss::orientation_loss_value(fp, fq, rp, rq, pos);
    double moved = loss::orientation_loss_value(fp, fq, rp * extra, rq * extra, pos);
    CHECK(std::abs(base - moved) < 1e-10);
  }
  SUBCASE("averages over pairs") {
    std::vector<Mat3> fp = {Mat3::Identity(), Mat3::Identity()};
    std::vector<Mat3> fq = {Mat3::Identity(), rot_z(180.0)};
    double v = loss::orientation_loss_value(fp, fq, Mat3::Identity(), Mat3::Identity(),
                                            {{0, 0}, {1, 1}});
    CHECK(v == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  }
  SUBCASE("empty positives define 0") {
    CHECK(loss::orientation_loss_value(id, id, Mat3::Identity(), Mat3::Identity(), {}) == 0.0);
  }
}

TEST_CASE("shape circle loss margin boundaries") {
  loss::LossConfig cfg;

  SUBCASE("positive at distance 0 and negative at 2 cost nothing") {
    Mat dp(1, 2), dq(2, 2);
    dp << 1, 0;
    dq << 1, 0, -1, 0;
    CHECK(loss::shape_circle_loss_value(dp, dq, one_anchor_set(), cfg) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("positive exactly on the margin contributes factor one") {
    const double d = cfg.delta_p;
    Mat dp(1, 2), dq(2, 2);
    dp << 1, 0;
    dq << 1 - d * d / 2.0, d * std::sqrt(1.0 - d * d / 4.0), -1, 0;
    double v = loss::shape_circle_loss_value(dp, dq, one_anchor_set(), cfg);
    CHECK(v == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("a closer-than-margin negative raises the loss") {
    Mat dp(1, 2), dq(2, 2);
    dp << 1, 0;
    dq << 1, 0, 0.5, std::sqrt(3.0) / 2.0;
    double v = loss::shape_circle_loss_value(dp, dq, one_anchor_set(), cfg);
    const double d = 1.0;
    const double beta = cfg.gamma * (cfg.delta_n - d);
    CHECK(v == doctest::Approx(beta * (cfg.delta_n - d)).epsilon(1e-9));
  }
}

TEST_CASE("occupancy circle loss rewards antipodal positives") {
  loss::LossConfig cfg;

  SUBCASE("antipodal positive and identical negative cost nothing") {
    Mat dp(1, 2), dq(2, 2);
    dp << 1, 0;
    dq << -1, 0, 1, 0;
    CHECK(loss::occupancy_circle_loss_value(dp, dq, one_anchor_set(), cfg) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("loss falls as the positive pair rotates toward antipodal") {
    // negative holds a constant factor of 1 (s = 2), so only the positive moves
    double prev = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= 8; ++step) {
      const double ang = std::numbers::pi * step / 8.0;
      Mat dp(1, 2), dq(2, 2);
      dp << 1, 0;
      dq << std::cos(ang), std::sin(ang), 1, 0;
      double v = loss::occupancy_circle_loss_value(dp, dq, one_anchor_set(), cfg);
      CHECK(v <= prev + 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("circle losses match a brute force oracle on random instances") {
  geom::Rng rng(52);
  loss::LossConfig cfg;
  for (int trial = 0; trial < 5; ++trial) {
    const int a = 4 + static_cast<int>(rng.uniform(0.0, 4.0));
    const int b = 4 + static_cast<int>(rng.uniform(0.0, 4.0));
    Mat dp = random_mat(rng, a, 6), dq = random_mat(rng, b, 6);
    loss::CorrespondenceSet corr;
    for (int i = 0; i < a; ++i) corr.mating_p.push_back(i);
    for (int j = 0; j < b; ++j) corr.mating_q.push_back(j);
    corr.pos_mask = Mat::Zero(a, b);
    corr.neg_mask = Mat::Zero(a, b);
    for (int i = 0; i < a; ++i)
      for (int j = 0; j < b; ++j) {
        double u = rng.u01();
        if (u < 0.4)
          corr.pos_mask(i, j) = 1.0;
        else if (u < 0.8)
          corr.neg_mask(i, j) = 1.0;
      }

    for (bool occupancy : {false, true}) {
      Mat hp = dp, hq = dq;
      for (int i = 0; i < a; ++i) hp.row(i) /= hp.row(i).norm();
      for (int j = 0; j < b; ++j) hq.row(j) /= hq.row(j).norm();
      auto pair_d = [&](int i, int j) {
        return occupancy ? (hp.row(i) + hq.row(j)).norm() : (hp.row(i) - hq.row(j)).norm();
      };
      auto anchor_term = [&](double sp, double sn) { return std::log(sp) + std::log(sn); };
      double total = 0.0;
      int count = 0;
      for (int i = 0; i < a; ++i) {
        double sp = 0.0, sn = 0.0;
        for (int j = 0; j < b; ++j) {
          double d = pair_d(i, j);
          if (corr.pos_mask(i, j) > 0)
            sp += std::exp(cfg.gamma * std::max(d - cfg.delta_p, 0.0) * (d - cfg.delta_p));
          if (corr.neg_mask(i, j) > 0)
            sn += std::exp(cfg.gamma * std::max(cfg.delta_n - d, 0.0) * (cfg.delta_n - d));
        }
        if (sp > 0 && sn > 0) {
          total += anchor_term(sp, sn);
          ++count;
        }
      }
      for (int j = 0; j < b; ++j) {
        double sp = 0.0, sn = 0.0;
        for (int i = 0; i < a; ++i) {
          double d = pair_d(i, j);
          if (corr.pos_mask(i, j) > 0)
            sp += std::exp(cfg.gamma * std::max(d - cfg.delta_p, 0.0) * (d - cfg.delta_p));
          if (corr.neg_mask(i, j) > 0)
            sn += std::exp(cfg.gamma * std::max(cfg.delta_n - d, 0.0) * (cfg.delta_n - d));
        }
        if (sp > 0 && sn > 0) {
          total += anchor_term(sp, sn);
          ++count;
        }
      }
      double expect = count > 0 ? total / count : 0.0;
      double got = occupancy ? loss::occupancy_circle_loss_value(dp, dq, corr, cfg)
                             : loss::shape_circle_loss_value(dp, dq, corr, cfg);
      CHECK(std::abs(got - expect) < 1e-9);
    }
  }
}

TEST_CASE("point matching loss is the floored negative log likelihood") {
  SUBCASE("single match at one half") {
    Mat z(2, 2);
    z << 0.5, 0.5, 0.5, 0.5;
    loss::CorrespondenceSet corr;
    corr.positives = {{0, 0}};
    corr.mating_p = {0};
    corr.mating_q = {0};
    double v = loss::point_matching_loss_value(z, corr);
    CHECK(v == doctest::Approx(-std::log(0.5)).epsilon(1e-12));
    CHECK(v == doctest::Approx(0.6931).epsilon(1e-4));
  }
  SUBCASE("certain ground truth costs nothing") {
    Mat z(3, 3);
    z.setConstant(1e-9);
    z(0, 1) = 1.0;
    z(1, 0) = 1.0;
    loss::CorrespondenceSet corr;
    corr.positives = {{0, 1}, {1, 0}};
    corr.mating_p = {0, 1};
    corr.mating_q = {0, 1};
    CHECK(loss::point_matching_loss_value(z, corr) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("unmatched points are charged at their dustbins") {
    Mat z(2, 2);
    z << 0.1, 0.3, 0.4, 0.9;
    loss::CorrespondenceSet corr;
    double v = loss::point_matching_loss_value(z, corr);
    CHECK(v == doctest::Approx(-std::log(0.3) - std::log(0.4)).epsilon(1e-10));
  }
  SUBCASE("zero probability stays finite through the floor") {
    Mat z = Mat::Zero(2, 2);
    loss::CorrespondenceSet corr;
    corr.positives = {{0, 0}};
    corr.mating_p = {0};
    corr.mating_q = {0};
    double v = loss::point_matching_loss_value(z, corr);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(-std::log(1e-12)).epsilon(1e-10));
  }
}

TEST_CASE("total loss applies the fixed weights") {
  loss::LossConfig cfg;
  CHECK(loss::total_loss_value(0, 0, 0, 0, cfg) == 0.0);
  CHECK(loss::total_loss_value(1, 1, 1, 1, cfg) == doctest::Approx(2.1).epsilon(1e-12));
  CHECK_THROWS_AS(
      loss::total_loss_value(std::numeric_limits<double>::quiet_NaN(), 0, 0, 0, cfg),
      NonFiniteValue);
}

TEST_CASE("loss gradients agree with finite differences") {
  geom::Rng rng(53);

  SUBCASE("circle losses") {
    Mat dp0 = random_mat(rng, 3, 4), dq0 = random_mat(rng, 4, 4);
    loss::CorrespondenceSet corr;
    corr.mating_p = {0, 1, 2};
    corr.mating_q = {0, 1, 2, 3};
    corr.pos_mask = Mat::Zero(3, 4);
    corr.neg_mask = Mat::Zero(3, 4);
    corr.pos_mask(0, 0) = corr.pos_mask(1, 1) = corr.pos_mask(2, 2) = corr.pos_mask(2, 3) = 1.0;
    corr.neg_mask(0, 1) = corr.neg_mask(1, 0) = corr.neg_mask(0, 3) = corr.neg_mask(1, 2) =
        corr.neg_mask(2, 0) = 1.0;

    for (bool occupancy : {false, true}) {
      ad::ParamStore params;
      params.create("dp", dp0);
      params.create("dq", dq0);
      loss::LossConfig cfg;
      auto build = [&](ad::Graph& g, ad::ParamStore& ps) {
        return loss::circle_loss(g, g.param(ps, "dp"), g.param(ps, "dq"), corr, cfg, occupancy);
      };
      auto report = ad::check_gradients(build, params, 1e-6);
      CHECK(report.worst < 1e-5);
    }
  }
  SUBCASE("orientation loss through the frame field") {
    ad::ParamStore params;
    params.create("fp", random_mat(rng, 3, 9));
    params.create("fq", random_mat(rng, 3, 9));
    Mat3 rp = geom::random_rotation(rng), rq = geom::random_rotation(rng);
    std::vector<std::pair<int, int>> pos = {{0, 2}, {1, 1}, {2, 0}};
    auto build = [&](ad::Graph& g, ad::ParamStore& ps) {
      return loss::orientation_loss(g, g.param(ps, "fp"), g.param(ps, "fq"), rp, rq, pos);
    };
    auto report = ad::check_gradients(build, params, 1e-6);
    CHECK(report.worst < 1e-5);
  }
  SUBCASE("point matching through sinkhorn") {
    ad::ParamStore params;
    params.create("cost", random_mat(rng, 3, 4));
    params.create("bin", Mat::Constant(1, 1, 0.8));
    loss::CorrespondenceSet corr;
    corr.positives = {{0, 1}, {2, 0}};
    corr.mating_p = {0, 2};
    corr.mating_q = {0, 1};
    auto build = [&](ad::Graph& g, ad::ParamStore& ps) {
      ad::Var la = match::sinkhorn_log_assignment(g, g.param(ps, "cost"), g.param(ps, "bin"), 40);
      return loss::point_matching_loss(g, la, corr);
    };
    auto report = ad::check_gradients(build, params, 1e-6);
    CHECK(report.worst < 1e-4);
  }
}
