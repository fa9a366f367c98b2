#pragma once

#include <string>
#include <vector>

#include "cm/geom/types.hpp"
#include "cm/loss/correspondence.hpp"

namespace cm::eval {

// Pose of part q expressed in part p's frame: x_p = R x_q + t.
RigidTransform relative_pose(const RigidTransform& pose_p, const RigidTransform& pose_q);

// Intrinsic x-y-z decomposition, R = Rx(a) Ry(b) Rz(c), minimal branch with
// b in [-pi/2, pi/2]. Radians.
Vec3 euler_xyz_intrinsic(const Mat3& r);

struct PoseError {
  double rmse_r_deg = 0.0;  // root mean square of the three residual Euler angles
  double rmse_t = 0.0;      // root mean square of the three residual translation components
  double geodesic_deg = 0.0;
};

PoseError rmse_pose(const RigidTransform& pred_relative, const RigidTransform& gt_relative);

// Mean displacement of the q side of each ground-truth positive pair between
// the predicted and true relative placements. Anchoring is implicit: only the
// relative pose q->p enters, so a common global motion cancels.
double crd(const std::vector<RigidTransform>& pred_poses,
           const std::vector<RigidTransform>& gt_poses, const loss::CorrespondenceSet& corr,
           const std::vector<Cloud>& parts);

// Chamfer between the q cloud under the predicted and true relative
// placements (squared-distance convention, like chamfer_distance).
double anchored_chamfer(const std::vector<RigidTransform>& pred_poses,
                        const std::vector<RigidTransform>& gt_poses,
                        const std::vector<Cloud>& parts);

// Fraction of scores strictly below the threshold.
double part_accuracy(const std::vector<double>& scores, double threshold);

struct ObjectMetrics {
  int id = 0;
  int pattern = 0;
  double crd = 0.0;
  double cd = 0.0;
  double rmse_r_deg = 0.0;
  double rmse_t = 0.0;
  double geodesic_deg = 0.0;
};

struct MetricsReport {
  std::string split;
  int n_objects = 0;
  double crd = 0.0;
  double cd = 0.0;
  double rmse_r_deg = 0.0;
  double rmse_t = 0.0;
  double geodesic_deg = 0.0;
  double pa_crd = 0.0;
  double pa_cd = 0.0;
  double pa_crd_threshold = 0.05;
  double pa_cd_threshold = 0.01;
  std::vector<ObjectMetrics> per_object;
};

MetricsReport aggregate_metrics(std::vector<ObjectMetrics> per_object, const std::string& split,
                                double pa_crd_threshold, double pa_cd_threshold);

}  // namespace cm::eval
