#pragma once

#include <filesystem>
#include <string>

#include "cm/ad/param_store.hpp"
#include "cm/data/object_io.hpp"
#include "cm/eval/metrics.hpp"
#include "cm/match/model.hpp"

namespace cm::eval {

struct EvalConfig {
  int points_per_part = 128;  // farthest-point subsample fed to the model
  bool oracle_poses = false;  // inject the ground truth as the prediction
  double pa_crd_threshold = 0.05;
  double pa_cd_threshold = 0.01;
};

// Predicted relative pose (q expressed in p's frame) for one object. The
// model sees a farthest-point subsample; metrics use the full clouds.
RigidTransform predict_relative_pose(ad::ParamStore& params, const match::ModelConfig& cfg,
                                     const Cloud& p, const Cloud& q, int points_per_part);

ObjectMetrics evaluate_object(ad::ParamStore& params, const match::ModelConfig& cfg,
                              const data::FracturedObject& obj, const EvalConfig& ecfg);

MetricsReport evaluate_split(ad::ParamStore& params, const match::ModelConfig& cfg,
                             const std::filesystem::path& root, const std::string& split,
                             const EvalConfig& ecfg);

void write_report(const std::filesystem::path& path, const MetricsReport& report);
std::string render_summary(const MetricsReport& report);

}  // namespace cm::eval
