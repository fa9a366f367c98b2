#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cm/ad/checkpoint.hpp"
#include "cm/ad/optimizer.hpp"
#include "cm/data/toy.hpp"
#include "cm/loss/losses.hpp"
#include "cm/match/model.hpp"

namespace cm::train {

struct TrainConfig {
  match::ModelConfig model;
  loss::LossConfig loss;
  ad::AdamWConfig adamw;
  int epochs = 30;
  int points_per_part = 96;   // per-step random subsample
  int objects_per_epoch = 0;  // 0 trains on every object each epoch
  double grad_clip = 1.0;
  uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;
  double orientation = 0.0;
  double shape = 0.0;
  double occupancy = 0.0;
  double matching = 0.0;
  double total = 0.0;
  double lr = 0.0;
  int steps = 0;
  int skipped = 0;  // objects whose subsample had no positives
};

using EpochCallback = std::function<void(const EpochLog&)>;

struct TrainState {
  ad::ParamStore params;
  ad::AdamW opt;
  int next_epoch = 0;

  TrainState() : opt(ad::AdamWConfig{}) {}
};

void init_train_state(TrainState& state, const TrainConfig& cfg);

// Runs epochs [state.next_epoch, stop_epoch), where stop_epoch < 0 means
// cfg.epochs. cfg.epochs always sets the cosine schedule length, so a run
// stopped early and resumed replays exactly the steps a straight-through run
// would take. Deterministic in cfg.seed for a fixed dataset.
std::vector<EpochLog> train_epochs(TrainState& state, const std::vector<data::FracturedObject>& objects,
                                   const TrainConfig& cfg, const EpochCallback& on_epoch = {},
                                   int stop_epoch = -1);

// One optimization step on one object; exposed for tests. Returns false when
// the subsample produced no positive pairs and the step was skipped.
bool train_step(TrainState& state, const data::FracturedObject& obj, const TrainConfig& cfg,
                double lr, uint64_t step_salt, EpochLog& accum);

void save_train_checkpoint(const std::string& path, const TrainState& state, const TrainConfig& cfg);

// Restores parameters, optimizer moments and the next epoch index. The store
// must already hold parameters of the right shapes (init_train_state).
void load_train_checkpoint(const std::string& path, TrainState& state);

nlohmann::json model_config_to_json(const match::ModelConfig& cfg);
match::ModelConfig model_config_from_json(const nlohmann::json& j);

// Rebuilds the model configuration a checkpoint was trained with from its
// header alone, without touching the tensor blob.
match::ModelConfig checkpoint_model_config(const std::string& path);

}  // namespace cm::train
