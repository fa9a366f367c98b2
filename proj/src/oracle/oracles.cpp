#include "cm/oracle/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cm::oracle {

namespace {

double pair_statistic(const Mat& hp, const Mat& hq, int i, int j, bool occupancy) {
  double acc = 0.0;
  for (int c = 0; c < hp.cols(); ++c) {
    const double v = occupancy ? hp(i, c) + hq(j, c) : hp(i, c) - hq(j, c);
    acc += v * v;
  }
  return std::sqrt(std::max(acc, 1e-24));
}

}  // namespace

double oracle_circle_loss(const Mat& desc_p, const Mat& desc_q,
                          const loss::CorrespondenceSet& corr, const loss::LossConfig& cfg,
                          bool occupancy) {
  const int a = static_cast<int>(corr.mating_p.size());
  const int b = static_cast<int>(corr.mating_q.size());
  if (a == 0 || b == 0) return 0.0;

  Mat hp(a, desc_p.cols()), hq(b, desc_q.cols());
  for (int r = 0; r < a; ++r) hp.row(r) = desc_p.row(corr.mating_p[r]);
  for (int c = 0; c < b; ++c) hq.row(c) = desc_q.row(corr.mating_q[c]);

  Mat pos = corr.pos_mask, neg = corr.neg_mask;
  for (int r = 0; r < a; ++r)
    if (hp.row(r).norm() < 1e-12) {
      pos.row(r).setZero();
      neg.row(r).setZero();
    } else {
      hp.row(r) /= hp.row(r).norm();
    }
  for (int c = 0; c < b; ++c)
    if (hq.row(c).norm() < 1e-12) {
      pos.col(c).setZero();
      neg.col(c).setZero();
    } else {
      hq.row(c) /= hq.row(c).norm();
    }

  double total = 0.0;
  int anchors = 0;
  auto accumulate = [&](bool by_row, int idx) {
    double sp = 0.0, sn = 0.0;
    const int other = by_row ? b : a;
    for (int o = 0; o < other; ++o) {
      const int r = by_row ? idx : o;
      const int c = by_row ? o : idx;
      const double d = pair_statistic(hp, hq, r, c, occupancy);
      if (pos(r, c) > 0.0) {
        const double alpha = cfg.gamma * std::max(d - cfg.delta_p, 0.0);
        sp += std::exp(alpha * (d - cfg.delta_p));
      }
      if (neg(r, c) > 0.0) {
        const double beta = cfg.gamma * std::max(cfg.delta_n - d, 0.0);
        sn += std::exp(beta * (cfg.delta_n - d));
      }
    }
    if (sp > 0.0 && sn > 0.0) {
      total += cfg.plus_one ? std::log1p(sp * sn) : std::log(sp * sn);
      ++anchors;
    }
  };
  for (int r = 0; r < a; ++r) accumulate(true, r);
  for (int c = 0; c < b; ++c) accumulate(false, c);
  return anchors > 0 ? total / anchors : 0.0;
}

RigidTransform oracle_kabsch(const Cloud& src, const Cloud& tgt, const Vec& weights) {
  const int n = static_cast<int>(src.rows());
  if (n > 5) throw ShapeMismatch("oracle_kabsch: more than 5 points");
  if (tgt.rows() != n || weights.size() != n)
    throw ShapeMismatch("oracle_kabsch: size mismatch");
  const double wsum = weights.sum();
  if (wsum <= 0.0) throw DegenerateInput("oracle_kabsch: nonpositive weight sum");

  Vec3 pbar = Vec3::Zero(), qbar = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    pbar += weights(i) * src.row(i).transpose();
    qbar += weights(i) * tgt.row(i).transpose();
  }
  pbar /= wsum;
  qbar /= wsum;

  auto euler = [](double a, double b, double c) {
    return Mat3(Eigen::AngleAxisd(a, Vec3::UnitZ()) * Eigen::AngleAxisd(b, Vec3::UnitY()) *
                Eigen::AngleAxisd(c, Vec3::UnitZ()));
  };
  auto cost = [&](const Mat3& r) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      Vec3 d = r * (src.row(i).transpose() - pbar) - (tgt.row(i).transpose() - qbar);
      acc += weights(i) * d.squaredNorm();
    }
    return acc;
  };

  const double pi = std::numbers::pi;
  const int na = 24, nb = 13, nc = 24;
  double best = std::numeric_limits<double>::infinity();
  double ba = 0, bb = 0, bc = 0;
  for (int ia = 0; ia < na; ++ia)
    for (int ib = 0; ib < nb; ++ib)
      for (int ic = 0; ic < nc; ++ic) {
        const double a = 2.0 * pi * ia / na;
        const double b = pi * ib / (nb - 1);
        const double c = 2.0 * pi * ic / nc;
        const double v = cost(euler(a, b, c));
        if (v < best) {
          best = v;
          ba = a;
          bb = b;
          bc = c;
        }
      }

  double step = 2.0 * pi / na;
  for (int round = 0; round < 60; ++round) {
    bool improved = false;
    for (int da = -1; da <= 1; ++da)
      for (int db = -1; db <= 1; ++db)
        for (int dc = -1; dc <= 1; ++dc) {
          if (!da && !db && !dc) continue;
          const double a = ba + step * da, b = bb + step * db, c = bc + step * dc;
          const double v = cost(euler(a, b, c));
          if (v < best) {
            best = v;
            ba = a;
            bb = b;
            bc = c;
            improved = true;
          }
        }
    if (!improved) step *= 0.5;
    if (step < 1e-7) break;
  }

  RigidTransform out;
  out.R = euler(ba, bb, bc);
  out.t = qbar - out.R * pbar;
  return out;
}

Mat oracle_assignment(const Mat& cost, double dustbin, int iterations) {
  using LD = long double;
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  std::vector<std::vector<LD>> c(n + 1, std::vector<LD>(m + 1, static_cast<LD>(dustbin)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) c[i][j] = static_cast<LD>(cost(i, j));

  std::vector<LD> la(n + 1, 0.0L), lb(m + 1, 0.0L), u(n + 1, 0.0L), v(m + 1, 0.0L);
  la[n] = std::log(static_cast<LD>(m));
  lb[m] = std::log(static_cast<LD>(n));

  auto lse = [](const std::vector<LD>& xs) {
    LD mx = -std::numeric_limits<LD>::infinity();
    for (LD x : xs) mx = std::max(mx, x);
    LD acc = 0.0L;
    for (LD x : xs) acc += std::exp(x - mx);
    return mx + std::log(acc);
  };

  std::vector<LD> row(m + 1), col(n + 1);
  for (int it = 0; it < iterations; ++it) {
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= m; ++j) row[j] = c[i][j] + v[j];
      u[i] = la[i] - lse(row);
    }
    for (int j = 0; j <= m; ++j) {
      for (int i = 0; i <= n; ++i) col[i] = c[i][j] + u[i];
      v[j] = lb[j] - lse(col);
    }
  }

  Mat z(n + 1, m + 1);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= m; ++j)
      z(i, j) = static_cast<double>(std::exp(c[i][j] + u[i] + v[j]));
  return z;
}

std::vector<std::vector<int>> oracle_knn(const Cloud& points, int k) {
  const int n = static_cast<int>(points.rows());
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> dists;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      dists.push_back({(points.row(j) - points.row(i)).squaredNorm(), j});
    }
    std::sort(dists.begin(), dists.end());
    for (int e = 0; e < k; ++e) out[i].push_back(dists[e].second);
  }
  return out;
}

std::vector<int> oracle_fps(const Cloud& points, int count) {
  const int n = static_cast<int>(points.rows());
  Vec3 centroid = points.colwise().mean().transpose();
  int start = 0;
  double far = -1.0;
  for (int i = 0; i < n; ++i) {
    const double d = (points.row(i).transpose() - centroid).squaredNorm();
    if (d > far) {
      far = d;
      start = i;
    }
  }
  std::vector<int> chosen = {start};
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(chosen.size()) < count) {
    for (int i = 0; i < n; ++i)
      dist[i] = std::min(dist[i], (points.row(i) - points.row(chosen.back())).squaredNorm());
    int next = 0;
    double best = -1.0;
    for (int i = 0; i < n; ++i)
      if (dist[i] > best) {
        best = dist[i];
        next = i;
      }
    chosen.push_back(next);
  }
  return chosen;
}

}  // namespace cm::oracle
