#include "cm/assemble/assembler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cm/geom/core.hpp"
#include "cm/match/sinkhorn.hpp"

namespace cm::assemble {

PoseEstimate estimate_pose_from_assignment(const Cloud& src, const Cloud& tgt, const Mat& z,
                                           int k) {
  if (src.rows() < 3 || tgt.rows() < 3)
    throw ShapeMismatch("estimate_pose_from_assignment: need at least 3 points per cloud");
  if (z.rows() != src.rows() + 1 || z.cols() != tgt.rows() + 1)
    throw ShapeMismatch("estimate_pose_from_assignment: assignment shape mismatch");

  auto top = match::topk_correspondences(z, k);
  const int n = static_cast<int>(top.matches.size());
  Cloud s(n, 3), t(n, 3);
  Vec w(n);
  for (int e = 0; e < n; ++e) {
    s.row(e) = src.row(top.matches[e].i);
    t.row(e) = tgt.row(top.matches[e].j);
    w(e) = top.matches[e].w;
  }
  auto fit = geom::weighted_kabsch(s, t, w);

  PoseEstimate out;
  out.transform = fit.transform;
  out.degenerate = fit.degenerate;
  out.short_of_k = top.short_of_k;
  out.matchability = z.topLeftCorner(src.rows(), tgt.rows()).sum();
  return out;
}

PairEstimate estimate_pairwise(ad::ParamStore& params, const Cloud& src, const Cloud& tgt,
                               const match::ModelConfig& cfg) {
  ad::Graph g;
  auto fwd = match::model_forward(g, params, src, tgt, cfg);
  PairEstimate out;
  out.assign = g.value(fwd.assign);
  out.pose = estimate_pose_from_assignment(src, tgt, out.assign, cfg.topk);
  out.information = information_scalar(g.value(fwd.log_assign));
  return out;
}

double information_scalar(const Mat& log_z) {
  const int n = static_cast<int>(log_z.rows()) - 1;
  const int m = static_cast<int>(log_z.cols()) - 1;
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) acc += std::exp(std::max(log_z(i, j), -50.0));
  return 1.0 / acc;
}

Mat6 information_matrix(const Mat& log_z) { return information_scalar(log_z) * Mat6::Identity(); }

PoseGraph build_pose_graph(const std::vector<Cloud>& parts, const PairEstimator& estimator) {
  const int n = static_cast<int>(parts.size());
  if (n < 2) throw ShapeMismatch("build_pose_graph: need at least 2 parts");

  PoseGraph graph;
  graph.point_counts.reserve(n);
  for (const auto& part : parts) graph.point_counts.push_back(static_cast<int>(part.rows()));

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      PoseGraphEdge edge;
      edge.source = i;
      edge.target = j;
      try {
        // x_i = T(x_j): the estimator maps its source cloud into its target's frame
        auto est = estimator(parts[j], parts[i]);
        edge.transform = est.pose.transform;
        edge.information = est.information;
        edge.matchability = est.pose.matchability;
        edge.flagged = est.pose.degenerate;
      } catch (const Error&) {
        edge.flagged = true;
      }
      graph.edges.push_back(edge);
    }
  return graph;
}

PoseGraph prune_edges(const PoseGraph& graph) {
  const int n = static_cast<int>(graph.point_counts.size());
  std::vector<int> best(n, -1);
  for (int e = 0; e < static_cast<int>(graph.edges.size()); ++e) {
    const auto& edge = graph.edges[e];
    if (best[edge.source] < 0) {
      best[edge.source] = e;
      continue;
    }
    const auto& cur = graph.edges[best[edge.source]];
    if (cur.flagged != edge.flagged) {
      if (cur.flagged) best[edge.source] = e;
      continue;
    }
    if (edge.matchability > cur.matchability ||
        (edge.matchability == cur.matchability && edge.target < cur.target))
      best[edge.source] = e;
  }

  PoseGraph out;
  out.point_counts = graph.point_counts;
  for (int i = 0; i < n; ++i) {
    if (best[i] < 0) throw Error("prune_edges: node " + std::to_string(i) + " has no outgoing edge");
    out.edges.push_back(graph.edges[best[i]]);
  }
  return out;
}

namespace {

void require_connected(const PoseGraph& graph, const char* where) {
  const int n = static_cast<int>(graph.point_counts.size());
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (const auto& e : graph.edges)
    if (!e.flagged) root[find(e.source)] = find(e.target);
  for (int i = 1; i < n; ++i)
    if (find(i) != find(0)) throw Error(std::string(where) + ": pose graph is disconnected");
}

Mat3 project_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 d = Mat3::Identity();
    d(2, 2) = -1.0;
    r = svd.matrixU() * d * svd.matrixV().transpose();
  }
  return r;
}

}  // namespace

std::vector<Mat3> rotation_average(const PoseGraph& graph, int anchor) {
  const int n = static_cast<int>(graph.point_counts.size());
  require_connected(graph, "rotation_average");

  Mat a = Mat::Zero(3 * n, 3 * n);
  for (const auto& e : graph.edges) {
    if (e.flagged) continue;
    const double w = std::max(e.information, 1e-12);
    const Mat3& r = e.transform.R;  // constraint: global_target = global_source * r
    const int i = e.source, j = e.target;
    a.block<3, 3>(3 * i, 3 * i) += w * Mat3::Identity();
    a.block<3, 3>(3 * j, 3 * j) += w * Mat3::Identity();
    a.block<3, 3>(3 * i, 3 * j) -= w * r;
    a.block<3, 3>(3 * j, 3 * i) -= w * r.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Mat> eig(a);
  Mat z = eig.eigenvectors().leftCols(3);  // rows 3i..3i+2 hold node i's transposed rotation

  // blocks carry an unknown shared basis mixing; pairing each block against
  // the anchor's cancels it and lands the anchor on the identity
  Mat3 ba = z.block<3, 3>(3 * anchor, 0);
  std::vector<Mat3> out(n);
  for (int i = 0; i < n; ++i)
    out[i] = project_rotation((z.block<3, 3>(3 * i, 0) * ba.transpose()).transpose());
  out[anchor] = Mat3::Identity();
  return out;
}

std::vector<Vec3> solve_translations(const PoseGraph& graph, const std::vector<Mat3>& rotations,
                                     int anchor) {
  const int n = static_cast<int>(graph.point_counts.size());
  require_connected(graph, "solve_translations");

  std::vector<int> col(n, -1);
  int vars = 0;
  for (int i = 0; i < n; ++i)
    if (i != anchor) col[i] = vars++;

  int live = 0;
  for (const auto& e : graph.edges)
    if (!e.flagged) ++live;

  Mat a = Mat::Zero(3 * live, 3 * vars);
  Vec b = Vec::Zero(3 * live);
  int row = 0;
  for (const auto& e : graph.edges) {
    if (e.flagged) continue;
    const double sw = std::sqrt(std::max(e.information, 1e-12));
    // t_target - t_source = R_source * t_edge
    Vec3 rhs = rotations[e.source] * e.transform.t;
    if (col[e.target] >= 0)
      a.block<3, 3>(3 * row, 3 * col[e.target]) = sw * Mat3::Identity();
    if (col[e.source] >= 0)
      a.block<3, 3>(3 * row, 3 * col[e.source]) = -sw * Mat3::Identity();
    b.segment<3>(3 * row) = sw * rhs;
    ++row;
  }

  Vec x = a.colPivHouseholderQr().solve(b);
  std::vector<Vec3> out(n, Vec3::Zero());
  for (int i = 0; i < n; ++i)
    if (col[i] >= 0) out[i] = x.segment<3>(3 * col[i]);
  return out;
}

GlobalPoses assemble_graph(const PoseGraph& graph) {
  const int n = static_cast<int>(graph.point_counts.size());
  int anchor = 0;
  for (int i = 1; i < n; ++i)
    if (graph.point_counts[i] > graph.point_counts[anchor]) anchor = i;

  PoseGraph pruned = prune_edges(graph);
  auto rotations = rotation_average(pruned, anchor);
  auto translations = solve_translations(pruned, rotations, anchor);

  GlobalPoses out;
  out.anchor = anchor;
  out.poses.resize(n);
  for (int i = 0; i < n; ++i) out.poses[i] = {rotations[i], translations[i]};
  return out;
}

}  // namespace cm::assemble
