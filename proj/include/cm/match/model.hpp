#pragma once

#include "cm/match/attention.hpp"
#include "cm/match/heads.hpp"
#include "cm/match/sinkhorn.hpp"
#include "cm/net/backbone.hpp"
#include "cm/net/orientation.hpp"

namespace cm::match {

struct ModelConfig {
  net::BackboneConfig backbone;
  int descriptor_dim = 512;
  int attention_hidden = 128;
  int sinkhorn_iterations = 100;
  int topk = 128;
  double norm_eps = 1e-5;
  bool use_occupancy = true;  // false gives the shape-only ablation
};

// One forward pass over a fragment pair; every stage is exposed for losses,
// analysis export and tests.
struct PairForward {
  ad::Var f_eqv_p, f_eqv_q;
  net::OrientationField ori_p, ori_q;
  ad::Var f_inv_p, f_inv_q;
  ad::Var fs_p, fs_q;
  ad::Var fo_p, fo_q;  // invalid when occupancy disabled
  CostOut cost;
  ad::Var log_assign;  // (N+1 x M+1)
  ad::Var assign;
};

void init_model_params(ad::ParamStore& params, const ModelConfig& cfg, uint64_t seed);

PairForward model_forward(ad::Graph& g, ad::ParamStore& params, const Cloud& p, const Cloud& q,
                          const ModelConfig& cfg);

}  // namespace cm::match
