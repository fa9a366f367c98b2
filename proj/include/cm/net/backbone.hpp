#pragma once

#include <string>
#include <vector>

#include "cm/ad/graph.hpp"
#include "cm/geom/core.hpp"

namespace cm::net {

struct BackboneConfig {
  int channels = 341;              // output equivariant channel count D
  int knn = 16;                    // EdgeConv neighborhood size
  std::vector<int> widths = {32, 64, 128};  // per-level EdgeConv widths
  double slope = 0.2;
};

// Creates every backbone parameter (deterministic order and values per seed).
void init_backbone_params(ad::ParamStore& params, const BackboneConfig& cfg, geom::Rng& rng);

// U-shaped equivariant extractor over a single fragment cloud. The cloud is
// centered internally, so the output is translation invariant and rotation
// equivariant. Returns (D x 3K) features aligned with the input point order.
ad::Var unet_forward(ad::Graph& g, ad::ParamStore& params, const Cloud& points,
                     const BackboneConfig& cfg);

}  // namespace cm::net
