#include "cm/eval/evaluate.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cm/assemble/assembler.hpp"
#include "cm/geom/core.hpp"

namespace cm::eval {
namespace {

Cloud fps_subsample(const Cloud& pts, int m) {
  if (pts.rows() <= m) return pts;
  const auto idx = geom::farthest_point_sample(pts, m);
  Cloud out(Eigen::Index(idx.size()), 3);
  for (size_t k = 0; k < idx.size(); ++k) out.row(Eigen::Index(k)) = pts.row(idx[k]);
  return out;
}

}  // namespace

RigidTransform predict_relative_pose(ad::ParamStore& params, const match::ModelConfig& cfg,
                                     const Cloud& p, const Cloud& q, int points_per_part) {
  const Cloud p_sub = fps_subsample(p, points_per_part);
  const Cloud q_sub = fps_subsample(q, points_per_part);
  // the estimate maps its source cloud into the target frame: q -> p
  const auto est = assemble::estimate_pairwise(params, q_sub, p_sub, cfg);
  return est.pose.transform;
}

ObjectMetrics evaluate_object(ad::ParamStore& params, const match::ModelConfig& cfg,
                              const data::FracturedObject& obj, const EvalConfig& ecfg) {
  const auto corr = data::object_correspondences(obj);
  const std::vector<RigidTransform> gt = {obj.gt_poses[0], obj.gt_poses[1]};

  std::vector<RigidTransform> pred(2);
  if (ecfg.oracle_poses) {
    pred = gt;
  } else {
    pred[0] = RigidTransform{};  // anchor p at identity
    pred[1] = predict_relative_pose(params, cfg, obj.parts[0], obj.parts[1], ecfg.points_per_part);
  }

  ObjectMetrics m;
  m.pattern = obj.pattern;
  m.crd = crd(pred, gt, corr, obj.parts);
  m.cd = anchored_chamfer(pred, gt, obj.parts);
  const auto pe = rmse_pose(relative_pose(pred[0], pred[1]), relative_pose(gt[0], gt[1]));
  m.rmse_r_deg = pe.rmse_r_deg;
  m.rmse_t = pe.rmse_t;
  m.geodesic_deg = pe.geodesic_deg;
  return m;
}

MetricsReport evaluate_split(ad::ParamStore& params, const match::ModelConfig& cfg,
                             const std::filesystem::path& root, const std::string& split,
                             const EvalConfig& ecfg) {
  const auto manifest = data::load_manifest(root);
  const auto entries = manifest.split(split);
  if (entries.empty()) throw DataError("evaluate_split: split '" + split + "' is empty");

  std::vector<ObjectMetrics> per_object;
  per_object.reserve(entries.size());
  for (const auto& entry : entries) {
    const auto obj = data::load_entry(root, entry);
    ObjectMetrics m = evaluate_object(params, cfg, obj, ecfg);
    m.id = entry.id;
    per_object.push_back(m);
  }
  return aggregate_metrics(std::move(per_object), split, ecfg.pa_crd_threshold,
                           ecfg.pa_cd_threshold);
}

void write_report(const std::filesystem::path& path, const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["split"] = report.split;
  j["n_objects"] = report.n_objects;
  j["metrics"] = {{"crd", report.crd},
                  {"cd", report.cd},
                  {"rmse_r_deg", report.rmse_r_deg},
                  {"rmse_t", report.rmse_t},
                  {"geodesic_deg", report.geodesic_deg},
                  {"pa_crd", report.pa_crd},
                  {"pa_cd", report.pa_cd}};
  j["thresholds"] = {{"pa_crd", report.pa_crd_threshold}, {"pa_cd", report.pa_cd_threshold}};
  j["per_object"] = nlohmann::ordered_json::array();
  for (const auto& o : report.per_object) {
    j["per_object"].push_back({{"id", o.id},
                               {"pattern", o.pattern},
                               {"crd", o.crd},
                               {"cd", o.cd},
                               {"rmse_r_deg", o.rmse_r_deg},
                               {"rmse_t", o.rmse_t},
                               {"geodesic_deg", o.geodesic_deg}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

std::string render_summary(const MetricsReport& report) {
  std::ostringstream os;
  os << "split " << report.split << ", " << report.n_objects << " objects\n";
  char line[128];
  std::snprintf(line, sizeof line, "  %-14s %10.6f\n", "CRD", report.crd);
  os << line;
  std::snprintf(line, sizeof line, "  %-14s %10.6f\n", "CD", report.cd);
  os << line;
  std::snprintf(line, sizeof line, "  %-14s %10.4f\n", "RMSE(R) deg", report.rmse_r_deg);
  os << line;
  std::snprintf(line, sizeof line, "  %-14s %10.6f\n", "RMSE(T)", report.rmse_t);
  os << line;
  std::snprintf(line, sizeof line, "  %-14s %10.4f\n", "geodesic deg", report.geodesic_deg);
  os << line;
  std::snprintf(line, sizeof line, "  %-14s %10.4f (<%g)\n", "PA_CRD", report.pa_crd,
                report.pa_crd_threshold);
  os << line;
  std::snprintf(line, sizeof line, "  %-14s %10.4f (<%g)\n", "PA_CD", report.pa_cd,
                report.pa_cd_threshold);
  os << line;
  return os.str();
}

}  // namespace cm::eval
