#pragma once

#include "cm/ad/graph.hpp"
#include "cm/geom/rng.hpp"

namespace cm::match {

struct AttentionOut {
  ad::Var a_s;  // (1 x d) channel weights for the shape branch
  ad::Var a_o;  // (1 x d) channel weights for the occupancy branch, invalid when disabled
};

// out_dim is the total attention width before the channel split (2*d with the
// occupancy branch enabled, d without).
void init_attention_params(ad::ParamStore& params, int in_dim, int hidden, int out_dim,
                           geom::Rng& rng);

// Concatenates both invariant feature sets along points, average- and
// max-pools over points, feeds both pooled vectors through one shared
// two-layer perceptron, sums, applies a sigmoid and splits channel-wise.
AttentionOut channel_attention(ad::Graph& g, ad::ParamStore& params, ad::Var f_inv_p,
                               ad::Var f_inv_q, bool split);

}  // namespace cm::match
