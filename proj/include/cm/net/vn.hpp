#pragma once

#include <vector>

#include "cm/ad/graph.hpp"
#include "cm/geom/rng.hpp"

namespace cm::net {

// Equivariant features live in (D x 3K) matrices: channel c of point k is the
// 3-vector in row c, columns [3k, 3k+3). Rotating the cloud by right-multiplying
// each point row with R rotates every feature triplet the same way.

// Channel mixing only; w is (D' x D). Equivariant for any orthogonal R.
ad::Var vn_linear(ad::Graph& g, ad::Var f, ad::Var w);

// Half-space nonlinearity with learned directions k = dir_w * f. Output is
// f where <f,k> >= 0 and f - (1-slope)<f,k_hat>k_hat elsewhere, written in the
// division-free form f + (1-slope)*relu(-<f,k>)*k/max(|k|^2, 1e-24) which
// passes zero-direction channels through unchanged.
ad::Var vn_leaky_relu(ad::Graph& g, ad::Var f, ad::Var dir_w, double slope);

// EdgeConv over a fixed neighbor graph: per edge (i, j) the feature
// [F_i, F_j - F_i] goes through vn_linear + vn_leaky_relu, then each
// neighborhood is max-pooled per channel along a learned direction computed
// from the neighborhood mean (pool_w maps the mean to the direction).
// nbrs[i] must list exactly the same count k of neighbors for every point.
ad::Var vn_edgeconv(ad::Graph& g, ad::Var f, const std::vector<std::vector<int>>& nbrs,
                    ad::Var w, ad::Var dir_w, ad::Var pool_w, double slope);

// Kaiming-style init for VN weight matrices, gain matched to the leaky slope.
Mat vn_init(geom::Rng& rng, int rows, int cols, double slope);

}  // namespace cm::net
