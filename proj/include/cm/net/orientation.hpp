#pragma once

#include "cm/ad/graph.hpp"
#include "cm/geom/rng.hpp"

namespace cm::net {

struct DegenerateFrame : Error {
  using Error::Error;
};

struct OrientationField {
  ad::Var frames;  // (3 x 3K): rows of each point block hold the x, y, z axes
  ad::Var mag_x;   // (1 x K) pre-normalization magnitude of the x candidate
  ad::Var mag_y;   // (1 x K) pre-normalization magnitude of the y candidate
};

void init_hypothesizer_params(ad::ParamStore& params, int channels, geom::Rng& rng);

// Reduces D equivariant channels to two axis candidates per point and runs
// Gram-Schmidt in-graph. A point whose candidates are degenerate (first axis
// or rejected second axis norm below eps) gets its y candidate nudged by 1e-6
// along a fixed direction orthogonal to x and is retried once, after which
// DegenerateFrame is thrown.
OrientationField hypothesize_orientation(ad::Graph& g, ad::ParamStore& params, ad::Var f_eqv,
                                         double eps = 1e-8);

// Per point i the (D x 3) channel block is multiplied by the transposed frame
// and flattened row-major, giving a (K x 3D) rotation-invariant matrix.
ad::Var invariant_features(ad::Graph& g, ad::Var f_eqv, ad::Var frames);

}  // namespace cm::net
