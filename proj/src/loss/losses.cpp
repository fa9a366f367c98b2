#include "cm/loss/losses.hpp"

#include <cmath>
#include <iostream>

namespace cm::loss {

using ad::Graph;
using ad::Var;

Var orientation_loss(Graph& g, Var frames_p, Var frames_q, const Mat3& r_p, const Mat3& r_q,
                     const std::vector<std::pair<int, int>>& positives) {
  if (positives.empty()) {
    std::cerr << "warning: orientation loss over empty positive set, defined as 0\n";
    return g.scalar(0.0);
  }
  std::vector<int> pi, qi;
  pi.reserve(positives.size());
  qi.reserve(positives.size());
  for (const auto& [i, j] : positives) {
    pi.push_back(i);
    qi.push_back(j);
  }
  Var ap = g.gather_points(g.rot3(frames_p, r_p), pi);
  Var aq = g.gather_points(g.rot3(frames_q, r_q), qi);
  Var diff = g.sub(ap, aq);
  Var fro2 = g.colwise_sum(g.dot3(diff, diff));
  return g.mean_all(g.sqrt_(g.clamp_min(fro2, 1e-24)));
}

Var circle_loss(Graph& g, Var desc_p, Var desc_q, const CorrespondenceSet& corr,
                const LossConfig& cfg, bool occupancy) {
  const int a = static_cast<int>(corr.mating_p.size());
  const int b = static_cast<int>(corr.mating_q.size());
  if (a == 0 || b == 0) {
    std::cerr << "warning: circle loss with no mating anchors, defined as 0\n";
    return g.scalar(0.0);
  }

  Var fp = g.gather_rows(desc_p, corr.mating_p);
  Var fq = g.gather_rows(desc_q, corr.mating_q);

  // zero-norm descriptors drop their point from anchors and pair sets
  Mat pos_mask = corr.pos_mask;
  Mat neg_mask = corr.neg_mask;
  {
    const Mat& vp = g.value(fp);
    const Mat& vq = g.value(fq);
    for (int r = 0; r < a; ++r)
      if (vp.row(r).norm() < 1e-12) {
        std::cerr << "warning: zero-norm descriptor skipped in circle loss\n";
        pos_mask.row(r).setZero();
        neg_mask.row(r).setZero();
      }
    for (int c = 0; c < b; ++c)
      if (vq.row(c).norm() < 1e-12) {
        std::cerr << "warning: zero-norm descriptor skipped in circle loss\n";
        pos_mask.col(c).setZero();
        neg_mask.col(c).setZero();
      }
  }

  auto normalize = [&](Var f) {
    Var n = g.sqrt_(g.clamp_min(g.rowwise_sum(g.mul(f, f)), 1e-24));
    return g.div_colvec(f, n);
  };
  Var hp = normalize(fp);
  Var hq = normalize(fq);

  Var gram = g.matmul_nt(hp, hq);
  Var pn = g.rowwise_sum(g.mul(hp, hp));
  Var qn = g.transpose(g.rowwise_sum(g.mul(hq, hq)));
  Var sq = occupancy ? g.scale(gram, 2.0) : g.scale(gram, -2.0);
  Var d = g.sqrt_(g.clamp_min(g.add_rowvec(g.add_colvec(sq, pn), qn), 1e-24));

  Var dm = g.add_scalar(d, -cfg.delta_p);
  Var ep = g.mul(g.exp_(g.scale(g.mul(g.relu(dm), dm), cfg.gamma)), g.constant(pos_mask));
  Var dn = g.add_scalar(g.neg(d), cfg.delta_n);
  Var en = g.mul(g.exp_(g.scale(g.mul(g.relu(dn), dn), cfg.gamma)), g.constant(neg_mask));

  Var prow = g.rowwise_sum(ep);
  Var nrow = g.rowwise_sum(en);
  Var pcol = g.colwise_sum(ep);
  Var ncol = g.colwise_sum(en);

  std::vector<std::pair<int, int>> vrow, vcol;
  for (int r = 0; r < a; ++r)
    if (pos_mask.row(r).sum() > 0.0 && neg_mask.row(r).sum() > 0.0) vrow.push_back({r, 0});
  for (int c = 0; c < b; ++c)
    if (pos_mask.col(c).sum() > 0.0 && neg_mask.col(c).sum() > 0.0) vcol.push_back({0, c});
  const int count = static_cast<int>(vrow.size() + vcol.size());
  if (count == 0) {
    std::cerr << "warning: circle loss with no valid anchors, defined as 0\n";
    return g.scalar(0.0);
  }

  auto term = [&](Var prod) {
    return cfg.plus_one ? g.log_(g.add_scalar(prod, 1.0)) : g.log_(prod);
  };
  Var acc;
  bool have = false;
  if (!vrow.empty()) {
    Var t = term(g.mul(g.gather_cells(prow, vrow), g.gather_cells(nrow, vrow)));
    acc = g.sum_all(t);
    have = true;
  }
  if (!vcol.empty()) {
    Var t = term(g.mul(g.gather_cells(pcol, vcol), g.gather_cells(ncol, vcol)));
    Var s = g.sum_all(t);
    acc = have ? g.add(acc, s) : s;
  }
  return g.scale(acc, 1.0 / static_cast<double>(count));
}

Var point_matching_loss(Graph& g, Var log_assign, const CorrespondenceSet& corr) {
  const int n = static_cast<int>(g.value(log_assign).rows()) - 1;
  const int m = static_cast<int>(g.value(log_assign).cols()) - 1;
  std::vector<std::pair<int, int>> cells(corr.positives.begin(), corr.positives.end());
  std::vector<bool> mate_p(n, false), mate_q(m, false);
  for (int i : corr.mating_p) mate_p[i] = true;
  for (int j : corr.mating_q) mate_q[j] = true;
  for (int i = 0; i < n; ++i)
    if (!mate_p[i]) cells.push_back({i, m});
  for (int j = 0; j < m; ++j)
    if (!mate_q[j]) cells.push_back({n, j});
  if (cells.empty()) return g.scalar(0.0);
  Var picks = g.clamp_min(g.gather_cells(log_assign, cells), std::log(1e-12));
  return g.neg(g.sum_all(picks));
}

Var total_loss(Graph& g, Var l_d, Var l_s, Var l_o, Var l_p, const LossConfig& cfg) {
  Var acc = g.add(g.scale(l_d, cfg.lambda_d), g.scale(l_s, cfg.lambda_s));
  if (l_o.valid()) acc = g.add(acc, g.scale(l_o, cfg.lambda_o));
  return g.add(acc, l_p);
}

double orientation_loss_value(const std::vector<Mat3>& fd_p, const std::vector<Mat3>& fd_q,
                              const Mat3& r_p, const Mat3& r_q,
                              const std::vector<std::pair<int, int>>& positives) {
  auto pack = [](const std::vector<Mat3>& f) {
    Mat m(3, 3 * f.size());
    for (std::size_t i = 0; i < f.size(); ++i) m.middleCols(3 * i, 3) = f[i];
    return m;
  };
  Graph g;
  Var loss = orientation_loss(g, g.constant(pack(fd_p)), g.constant(pack(fd_q)), r_p, r_q,
                              positives);
  return g.scalar_value(loss);
}

double shape_circle_loss_value(const Mat& desc_p, const Mat& desc_q, const CorrespondenceSet& corr,
                               const LossConfig& cfg) {
  Graph g;
  return g.scalar_value(circle_loss(g, g.constant(desc_p), g.constant(desc_q), corr, cfg, false));
}

double occupancy_circle_loss_value(const Mat& desc_p, const Mat& desc_q,
                                   const CorrespondenceSet& corr, const LossConfig& cfg) {
  Graph g;
  return g.scalar_value(circle_loss(g, g.constant(desc_p), g.constant(desc_q), corr, cfg, true));
}

double point_matching_loss_value(const Mat& assign, const CorrespondenceSet& corr) {
  Graph g;
  Var logz = g.log_(g.clamp_min(g.constant(assign), 1e-12));
  return g.scalar_value(point_matching_loss(g, logz, corr));
}

double total_loss_value(double l_d, double l_s, double l_o, double l_p, const LossConfig& cfg) {
  if (!std::isfinite(l_d) || !std::isfinite(l_s) || !std::isfinite(l_o) || !std::isfinite(l_p))
    throw NonFiniteValue("total loss: non-finite component");
  return cfg.lambda_d * l_d + cfg.lambda_s * l_s + cfg.lambda_o * l_o + l_p;
}

}  // namespace cm::loss
