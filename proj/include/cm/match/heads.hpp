#pragma once

#include <string>

#include "cm/ad/graph.hpp"
#include "cm/geom/rng.hpp"

namespace cm::match {

// Three per-point layers of (linear, instance normalization, activation).
// The final activation is a leaky rectifier for the shape head and a tanh for
// the occupancy head; the attention row reweights channels at the end.
void init_head_params(ad::ParamStore& params, const std::string& prefix, int in_dim, int width,
                      geom::Rng& rng);

ad::Var descriptor_head(ad::Graph& g, ad::ParamStore& params, const std::string& prefix,
                        ad::Var f_inv, ad::Var attention, bool tanh_final, double slope,
                        double norm_eps);

struct CostOut {
  ad::Var c;    // (N x M) combined cost
  ad::Var c_s;  // raw shape dot products
  ad::Var c_o;  // raw occupancy dot products, invalid when disabled
};

// C = (C_s - C_o) / sqrt(d); without the occupancy branch C = C_s / sqrt(d).
CostOut cost_matrix(ad::Graph& g, ad::Var fs_p, ad::Var fs_q, ad::Var fo_p, ad::Var fo_q);
CostOut cost_matrix_shape_only(ad::Graph& g, ad::Var fs_p, ad::Var fs_q);

}  // namespace cm::match
