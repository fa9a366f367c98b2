#include "cm/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cm/geom/core.hpp"

namespace cm::eval {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void check_pair_shapes(const std::vector<RigidTransform>& pred,
                       const std::vector<RigidTransform>& gt, const std::vector<Cloud>& parts) {
  if (pred.size() != 2 || gt.size() != 2 || parts.size() != 2) {
    throw ShapeMismatch("pair metrics expect exactly 2 parts");
  }
}

}  // namespace

RigidTransform relative_pose(const RigidTransform& pose_p, const RigidTransform& pose_q) {
  return pose_p.inverse() * pose_q;
}

Vec3 euler_xyz_intrinsic(const Mat3& r) {
  const double sb = std::clamp(r(0, 2), -1.0, 1.0);
  const double b = std::asin(sb);
  if (std::abs(std::cos(b)) < 1e-12) {
    // gimbal: a and c share an axis; put everything in a
    return {std::atan2(r(2, 1), r(1, 1)), b, 0.0};
  }
  return {std::atan2(-r(1, 2), r(2, 2)), b, std::atan2(-r(0, 1), r(0, 0))};
}

PoseError rmse_pose(const RigidTransform& pred_relative, const RigidTransform& gt_relative) {
  const Mat3 residual = pred_relative.R * gt_relative.R.transpose();
  const Vec3 angles = euler_xyz_intrinsic(residual) * kRadToDeg;
  const Vec3 dt = pred_relative.t - gt_relative.t;
  PoseError out;
  out.rmse_r_deg = angles.norm() / std::sqrt(3.0);
  out.rmse_t = dt.norm() / std::sqrt(3.0);
  out.geodesic_deg = geom::rotation_angle_deg(pred_relative.R, gt_relative.R);
  return out;
}

double crd(const std::vector<RigidTransform>& pred_poses,
           const std::vector<RigidTransform>& gt_poses, const loss::CorrespondenceSet& corr,
           const std::vector<Cloud>& parts) {
  check_pair_shapes(pred_poses, gt_poses, parts);
  if (corr.positives.empty()) throw DataError("crd: no positive correspondences");
  const RigidTransform rel_pred = relative_pose(pred_poses[0], pred_poses[1]);
  const RigidTransform rel_gt = relative_pose(gt_poses[0], gt_poses[1]);
  double sum = 0.0;
  for (const auto& [i, j] : corr.positives) {
    const Vec3 q = parts[1].row(j).transpose();
    sum += (rel_pred.apply(q) - rel_gt.apply(q)).norm();
  }
  return sum / double(corr.positives.size());
}

double anchored_chamfer(const std::vector<RigidTransform>& pred_poses,
                        const std::vector<RigidTransform>& gt_poses,
                        const std::vector<Cloud>& parts) {
  check_pair_shapes(pred_poses, gt_poses, parts);
  const RigidTransform rel_pred = relative_pose(pred_poses[0], pred_poses[1]);
  const RigidTransform rel_gt = relative_pose(gt_poses[0], gt_poses[1]);
  return geom::chamfer_distance(rel_pred.apply(parts[1]), rel_gt.apply(parts[1]));
}

double part_accuracy(const std::vector<double>& scores, double threshold) {
  if (scores.empty()) throw DataError("part_accuracy: empty score list");
  if (threshold <= 0.0) throw DataError("part_accuracy: threshold must be positive");
  int under = 0;
  for (double s : scores) {
    if (s < threshold) ++under;
  }
  return double(under) / double(scores.size());
}

MetricsReport aggregate_metrics(std::vector<ObjectMetrics> per_object, const std::string& split,
                                double pa_crd_threshold, double pa_cd_threshold) {
  if (per_object.empty()) throw DataError("aggregate_metrics: no objects");
  MetricsReport report;
  report.split = split;
  report.n_objects = int(per_object.size());
  report.pa_crd_threshold = pa_crd_threshold;
  report.pa_cd_threshold = pa_cd_threshold;

  std::vector<double> crds, cds;
  for (const auto& o : per_object) {
    report.crd += o.crd;
    report.cd += o.cd;
    report.rmse_r_deg += o.rmse_r_deg;
    report.rmse_t += o.rmse_t;
    report.geodesic_deg += o.geodesic_deg;
    crds.push_back(o.crd);
    cds.push_back(o.cd);
  }
  const double n = double(per_object.size());
  report.crd /= n;
  report.cd /= n;
  report.rmse_r_deg /= n;
  report.rmse_t /= n;
  report.geodesic_deg /= n;
  report.pa_crd = part_accuracy(crds, pa_crd_threshold);
  report.pa_cd = part_accuracy(cds, pa_cd_threshold);
  report.per_object = std::move(per_object);
  return report;
}

}  // namespace cm::eval
