#include "cm/match/model.hpp"

namespace cm::match {

using ad::Graph;
using ad::ParamStore;
using ad::Var;

void init_model_params(ParamStore& params, const ModelConfig& cfg, uint64_t seed) {
  geom::Rng rng(geom::stream_seed(seed, 0xC0DE));
  net::init_backbone_params(params, cfg.backbone, rng);
  net::init_hypothesizer_params(params, cfg.backbone.channels, rng);
  const int in_dim = 3 * cfg.backbone.channels;
  init_head_params(params, "shape", in_dim, cfg.descriptor_dim, rng);
  if (cfg.use_occupancy) init_head_params(params, "occ", in_dim, cfg.descriptor_dim, rng);
  init_attention_params(params, in_dim, cfg.attention_hidden,
                        cfg.use_occupancy ? 2 * cfg.descriptor_dim : cfg.descriptor_dim, rng);
  params.create("match.dustbin", Mat::Constant(1, 1, 1.0));
}

PairForward model_forward(Graph& g, ParamStore& params, const Cloud& p, const Cloud& q,
                          const ModelConfig& cfg) {
  PairForward out;
  out.f_eqv_p = net::unet_forward(g, params, p, cfg.backbone);
  out.f_eqv_q = net::unet_forward(g, params, q, cfg.backbone);
  out.ori_p = net::hypothesize_orientation(g, params, out.f_eqv_p);
  out.ori_q = net::hypothesize_orientation(g, params, out.f_eqv_q);
  out.f_inv_p = net::invariant_features(g, out.f_eqv_p, out.ori_p.frames);
  out.f_inv_q = net::invariant_features(g, out.f_eqv_q, out.ori_q.frames);

  AttentionOut attn = channel_attention(g, params, out.f_inv_p, out.f_inv_q, cfg.use_occupancy);
  const double slope = cfg.backbone.slope;
  out.fs_p = descriptor_head(g, params, "shape", out.f_inv_p, attn.a_s, false, slope, cfg.norm_eps);
  out.fs_q = descriptor_head(g, params, "shape", out.f_inv_q, attn.a_s, false, slope, cfg.norm_eps);
  if (cfg.use_occupancy) {
    out.fo_p = descriptor_head(g, params, "occ", out.f_inv_p, attn.a_o, true, slope, cfg.norm_eps);
    out.fo_q = descriptor_head(g, params, "occ", out.f_inv_q, attn.a_o, true, slope, cfg.norm_eps);
    out.cost = cost_matrix(g, out.fs_p, out.fs_q, out.fo_p, out.fo_q);
  } else {
    out.cost = cost_matrix_shape_only(g, out.fs_p, out.fs_q);
  }

  out.log_assign =
      sinkhorn_log_assignment(g, out.cost.c, g.param(params, "match.dustbin"),
                              cfg.sinkhorn_iterations);
  out.assign = g.exp_(out.log_assign);
  return out;
}

}  // namespace cm::match
