#include "cm/train/trainer.hpp"

#include <algorithm>
#include <numeric>

namespace cm::train {
namespace {

std::vector<int> random_subset(int n, int m, geom::Rng& rng) {
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  if (m >= n) return idx;
  for (int i = 0; i < m; ++i) {
    const int j = i + int(rng.index(uint64_t(n - i)));
    std::swap(idx[size_t(i)], idx[size_t(j)]);
  }
  idx.resize(size_t(m));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Cloud gather(const Cloud& pts, const std::vector<int>& idx) {
  Cloud out(Eigen::Index(idx.size()), 3);
  for (size_t k = 0; k < idx.size(); ++k) out.row(Eigen::Index(k)) = pts.row(idx[k]);
  return out;
}

}  // namespace

void init_train_state(TrainState& state, const TrainConfig& cfg) {
  state.params = ad::ParamStore();
  state.opt = ad::AdamW(cfg.adamw);
  state.next_epoch = 0;
  match::init_model_params(state.params, cfg.model, cfg.seed);
}

bool train_step(TrainState& state, const data::FracturedObject& obj, const TrainConfig& cfg,
                double lr, uint64_t step_salt, EpochLog& accum) {
  geom::Rng rng(geom::stream_seed(cfg.seed, 0x73746570, step_salt));
  const auto idx_p = random_subset(int(obj.parts[0].rows()), cfg.points_per_part, rng);
  const auto idx_q = random_subset(int(obj.parts[1].rows()), cfg.points_per_part, rng);
  const Cloud p = gather(obj.parts[0], idx_p);
  const Cloud q = gather(obj.parts[1], idx_q);

  const auto corr = loss::label_correspondences(obj.gt_poses[0].apply(p), obj.gt_poses[1].apply(q),
                                                obj.tau);
  if (corr.positives.empty()) return false;

  ad::Graph g;
  auto fwd = match::model_forward(g, state.params, p, q, cfg.model);

  // frames are predicted in the scrambled frames; transporting both into the
  // assembled frame means right-multiplying by the rotation each part rode in
  // on, which is the transpose of the stored undo rotation
  const Mat3 carry_p = obj.gt_poses[0].R.transpose();
  const Mat3 carry_q = obj.gt_poses[1].R.transpose();
  auto l_d = loss::orientation_loss(g, fwd.ori_p.frames, fwd.ori_q.frames, carry_p, carry_q,
                                    corr.positives);
  auto l_s = loss::shape_circle_loss(g, fwd.fs_p, fwd.fs_q, corr, cfg.loss);
  ad::Var l_o;
  if (cfg.model.use_occupancy) l_o = loss::occupancy_circle_loss(g, fwd.fo_p, fwd.fo_q, corr, cfg.loss);
  auto l_p = loss::point_matching_loss(g, fwd.log_assign, corr);
  auto total = loss::total_loss(g, l_d, l_s, l_o, l_p, cfg.loss);

  state.params.zero_grad();
  g.backward(total);
  state.params.clip_grad_norm(cfg.grad_clip);
  state.opt.step(state.params, lr);

  accum.orientation += g.scalar_value(l_d);
  accum.shape += g.scalar_value(l_s);
  accum.occupancy += l_o.valid() ? g.scalar_value(l_o) : 0.0;
  accum.matching += g.scalar_value(l_p);
  accum.total += g.scalar_value(total);
  accum.steps += 1;
  return true;
}

std::vector<EpochLog> train_epochs(TrainState& state, const std::vector<data::FracturedObject>& objects,
                                   const TrainConfig& cfg, const EpochCallback& on_epoch,
                                   int stop_epoch) {
  if (objects.empty()) throw DataError("train_epochs: empty training set");
  if (stop_epoch < 0 || stop_epoch > cfg.epochs) stop_epoch = cfg.epochs;
  std::vector<EpochLog> logs;
  for (int epoch = state.next_epoch; epoch < stop_epoch; ++epoch) {
    const double lr = ad::cosine_lr(cfg.adamw.lr, epoch, cfg.epochs);

    geom::Rng order_rng(geom::stream_seed(cfg.seed, 0x65706f63, uint64_t(epoch)));
    std::vector<int> order(objects.size());
    std::iota(order.begin(), order.end(), 0);
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[size_t(order_rng.index(i))]);
    }
    size_t take = order.size();
    if (cfg.objects_per_epoch > 0) take = std::min(take, size_t(cfg.objects_per_epoch));

    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    for (size_t s = 0; s < take; ++s) {
      const uint64_t salt = geom::stream_seed(uint64_t(epoch), uint64_t(s), uint64_t(order[s]));
      if (!train_step(state, objects[size_t(order[s])], cfg, lr, salt, log)) log.skipped += 1;
    }
    if (log.steps > 0) {
      const double n = double(log.steps);
      log.orientation /= n;
      log.shape /= n;
      log.occupancy /= n;
      log.matching /= n;
      log.total /= n;
    }
    state.next_epoch = epoch + 1;
    logs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return logs;
}

void save_train_checkpoint(const std::string& path, const TrainState& state,
                           const TrainConfig& cfg) {
  nlohmann::json extra;
  extra["next_epoch"] = state.next_epoch;
  extra["seed"] = cfg.seed;
  extra["model"] = model_config_to_json(cfg.model);
  ad::save_checkpoint(path, state.params, extra, &state.opt);
}

void load_train_checkpoint(const std::string& path, TrainState& state) {
  const auto extra = ad::load_checkpoint(path, state.params, &state.opt);
  state.next_epoch = extra.value("next_epoch", 0);
}

nlohmann::json model_config_to_json(const match::ModelConfig& cfg) {
  nlohmann::json j;
  j["channels"] = cfg.backbone.channels;
  j["widths"] = cfg.backbone.widths;
  j["knn"] = cfg.backbone.knn;
  j["slope"] = cfg.backbone.slope;
  j["descriptor_dim"] = cfg.descriptor_dim;
  j["attention_hidden"] = cfg.attention_hidden;
  j["sinkhorn_iterations"] = cfg.sinkhorn_iterations;
  j["topk"] = cfg.topk;
  j["use_occupancy"] = cfg.use_occupancy;
  j["norm_eps"] = cfg.norm_eps;
  return j;
}

match::ModelConfig model_config_from_json(const nlohmann::json& j) {
  match::ModelConfig cfg;
  try {
    cfg.backbone.channels = j.at("channels").get<int>();
    cfg.backbone.widths = j.at("widths").get<std::vector<int>>();
    cfg.backbone.knn = j.at("knn").get<int>();
    cfg.backbone.slope = j.at("slope").get<double>();
    cfg.descriptor_dim = j.at("descriptor_dim").get<int>();
    cfg.attention_hidden = j.at("attention_hidden").get<int>();
    cfg.sinkhorn_iterations = j.at("sinkhorn_iterations").get<int>();
    cfg.topk = j.at("topk").get<int>();
    cfg.use_occupancy = j.at("use_occupancy").get<bool>();
    cfg.norm_eps = j.at("norm_eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: bad model config: ") + e.what());
  }
  return cfg;
}

match::ModelConfig checkpoint_model_config(const std::string& path) {
  const auto extra = ad::peek_checkpoint_extra(path);
  if (!extra.contains("model"))
    throw ParseError("checkpoint: header carries no model config: " + path);
  return model_config_from_json(extra.at("model"));
}

}  // namespace cm::train
