#pragma once

#include <unordered_map>

#include "cm/ad/param_store.hpp"

namespace cm::ad {

struct AdamWConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// Cosine annealing from base_lr at epoch 0 to 0 at the final epoch.
double cosine_lr(double base_lr, int epoch, int total_epochs);

class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

  // Applies one decoupled-weight-decay update from the gradients currently
  // held in the store. lr_override < 0 uses the configured base rate.
  void step(ParamStore& params, double lr_override = -1.0);

  const AdamWConfig& config() const { return cfg_; }
  int64_t step_count() const { return t_; }

  struct Moments {
    Mat m;
    Mat v;
  };
  std::unordered_map<std::string, Moments>& state() { return state_; }
  const std::unordered_map<std::string, Moments>& state() const { return state_; }
  void set_step_count(int64_t t) { t_ = t; }

 private:
  AdamWConfig cfg_;
  std::unordered_map<std::string, Moments> state_;
  int64_t t_ = 0;
};

}  // namespace cm::ad
