#include "cm/match/heads.hpp"

#include <cmath>

#include "cm/net/vn.hpp"

namespace cm::match {

using ad::Graph;
using ad::ParamStore;
using ad::Var;

void init_head_params(ParamStore& params, const std::string& prefix, int in_dim, int width,
                      geom::Rng& rng) {
  int in = in_dim;
  for (int l = 0; l < 3; ++l) {
    params.create(prefix + ".w" + std::to_string(l), net::vn_init(rng, width, in, 0.2));
    in = width;
  }
}

namespace {

// per-cloud per-channel statistics; biases before this are a no-op, so the
// linear layers carry none
Var instance_norm(Graph& g, Var h, double eps) {
  Var mu = g.colwise_mean(h);
  Var hc = g.sub_rowvec(h, mu);
  Var var = g.colwise_mean(g.mul(hc, hc));
  return g.div_rowvec(hc, g.sqrt_(g.add_scalar(var, eps)));
}

}  // namespace

Var descriptor_head(Graph& g, ParamStore& params, const std::string& prefix, Var f_inv,
                    Var attention, bool tanh_final, double slope, double norm_eps) {
  Var h = f_inv;
  for (int l = 0; l < 3; ++l) {
    h = g.matmul_nt(h, g.param(params, prefix + ".w" + std::to_string(l)));
    h = instance_norm(g, h, norm_eps);
    if (l == 2 && tanh_final)
      h = g.tanh_(h);
    else
      h = g.leaky_relu(h, slope);
  }
  return g.mul_rowvec(h, attention);
}

CostOut cost_matrix(Graph& g, Var fs_p, Var fs_q, Var fo_p, Var fo_q) {
  CostOut out;
  out.c_s = g.matmul_nt(fs_p, fs_q);
  out.c_o = g.matmul_nt(fo_p, fo_q);
  const double z = std::sqrt(static_cast<double>(g.value(fs_p).cols()));
  out.c = g.scale(g.sub(out.c_s, out.c_o), 1.0 / z);
  return out;
}

CostOut cost_matrix_shape_only(Graph& g, Var fs_p, Var fs_q) {
  CostOut out;
  out.c_s = g.matmul_nt(fs_p, fs_q);
  const double z = std::sqrt(static_cast<double>(g.value(fs_p).cols()));
  out.c = g.scale(out.c_s, 1.0 / z);
  return out;
}

}  // namespace cm::match
