#include "cm/match/attention.hpp"

#include "cm/net/vn.hpp"

namespace cm::match {

using ad::Graph;
using ad::ParamStore;
using ad::Var;

void init_attention_params(ParamStore& params, int in_dim, int hidden, int out_dim,
                           geom::Rng& rng) {
  params.create("attn.w1", net::vn_init(rng, hidden, in_dim, 0.0));
  params.create("attn.b1", Mat::Zero(1, hidden));
  params.create("attn.w2", net::vn_init(rng, out_dim, hidden, 0.0));
  params.create("attn.b2", Mat::Zero(1, out_dim));
}

AttentionOut channel_attention(Graph& g, ParamStore& params, Var f_inv_p, Var f_inv_q,
                               bool split) {
  Var cat = g.concat_rows(f_inv_p, f_inv_q);
  Var avg = g.colwise_mean(cat);
  Var mx = g.colwise_max(cat);

  auto mlp = [&](Var x) {
    Var h = g.relu(g.add_rowvec(g.matmul_nt(x, g.param(params, "attn.w1")),
                                g.param(params, "attn.b1")));
    return g.add_rowvec(g.matmul_nt(h, g.param(params, "attn.w2")), g.param(params, "attn.b2"));
  };

  Var a = g.sigmoid(g.add(mlp(avg), mlp(mx)));
  AttentionOut out;
  if (split) {
    const int d = static_cast<int>(g.value(a).cols()) / 2;
    out.a_s = g.slice_cols(a, 0, d);
    out.a_o = g.slice_cols(a, d, d);
  } else {
    out.a_s = a;
  }
  return out;
}

}  // namespace cm::match
