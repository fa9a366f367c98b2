#pragma once

#include <functional>
#include <vector>

#include "cm/match/model.hpp"

namespace cm::assemble {

using Mat6 = Eigen::Matrix<double, 6, 6>;

struct PoseEstimate {
  RigidTransform transform;  // maps source-cloud coordinates into target-cloud coordinates
  double matchability = 0.0;
  bool degenerate = false;
  bool short_of_k = false;
};

// Pose from a precomputed assignment: top-k cells weight a rigid fit of the
// selected source points onto their matched target points. Seam for injecting
// reference assignments in tests.
PoseEstimate estimate_pose_from_assignment(const Cloud& src, const Cloud& tgt, const Mat& z,
                                           int k);

struct PairEstimate {
  PoseEstimate pose;
  Mat assign;                // (N+1) x (M+1) probabilities
  double information = 0.0;  // isotropic edge confidence scalar
};

// Full matcher forward plus pose extraction for one ordered pair.
PairEstimate estimate_pairwise(ad::ParamStore& params, const Cloud& src, const Cloud& tgt,
                               const match::ModelConfig& cfg);

// Inverse of the summed exponentials of the real-cell log assignment, entries
// floored at -50 so the sum stays positive.
double information_scalar(const Mat& log_z);
Mat6 information_matrix(const Mat& log_z);

struct PoseGraphEdge {
  int source = 0;
  int target = 0;
  RigidTransform transform;  // x_source = R * x_target + t
  double information = 0.0;
  double matchability = 0.0;
  bool flagged = false;  // estimation failed; carries an identity placeholder
};

struct PoseGraph {
  std::vector<int> point_counts;  // per node
  std::vector<PoseGraphEdge> edges;
};

using PairEstimator = std::function<PairEstimate(const Cloud& src, const Cloud& tgt)>;

// Evaluates every ordered pair independently; estimator failures become
// flagged edges rather than aborting the graph.
PoseGraph build_pose_graph(const std::vector<Cloud>& parts, const PairEstimator& estimator);

// Keeps each node's highest-matchability outgoing edge, ties to the lower
// target id; unflagged edges always beat flagged ones.
PoseGraph prune_edges(const PoseGraph& graph);

// Chordal least squares over the relative-rotation constraints, weighted by
// edge information: the three smallest eigenvectors of the stacked quadratic
// form give the relaxed blocks, each projected onto SO(3), then the gauge is
// fixed so the anchor is the identity.
std::vector<Mat3> rotation_average(const PoseGraph& graph, int anchor);

// Information-weighted linear least squares on the translation constraints
// induced by the solved rotations; anchor pinned at the origin.
std::vector<Vec3> solve_translations(const PoseGraph& graph, const std::vector<Mat3>& rotations,
                                     int anchor);

struct GlobalPoses {
  std::vector<RigidTransform> poses;  // anchor pose is the identity
  int anchor = 0;
};

// Prune, average rotations, solve translations; anchor is the node with the
// most points (lower id on ties).
GlobalPoses assemble_graph(const PoseGraph& graph);

}  // namespace cm::assemble
