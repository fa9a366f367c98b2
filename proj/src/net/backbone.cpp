#include "cm/net/backbone.hpp"

#include <algorithm>

#include "cm/net/vn.hpp"

namespace cm::net {

using ad::Graph;
using ad::ParamStore;
using ad::Var;

namespace {

struct LevelNames {
  std::string w, u, pool;
};

LevelNames ec_names(int level) {
  const std::string base = "backbone.ec" + std::to_string(level);
  return {base + ".w", base + ".u", base + ".pool"};
}

// constant (1 x 3K) feature holding the centered coordinates
Mat coords_feature(const Cloud& pts) {
  Mat f(1, 3 * pts.rows());
  const Eigen::RowVector3d c = pts.colwise().mean();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) f.middleCols(3 * i, 3) = pts.row(i) - c;
  return f;
}

std::vector<std::vector<int>> level_knn(const Cloud& pts, int k) {
  const int n = static_cast<int>(pts.rows());
  if (n < 2) throw ShapeMismatch("unet_forward: level with fewer than two points");
  return geom::knn_graph(pts, std::min(k, n - 1));
}

// inverse-distance 3-NN interpolation of coarse features onto fine points
Var interpolate_up(Graph& g, Var coarse_feat, const Cloud& coarse_pts, const Cloud& fine_pts) {
  const int nc = static_cast<int>(coarse_pts.rows());
  const int nf = static_cast<int>(fine_pts.rows());
  const int m = std::min(3, nc);
  Var out;
  for (int s = 0; s < m; ++s) {
    std::vector<int> idx(nf);
    Mat wrow(1, nf);
    for (int i = 0; i < nf; ++i) {
      std::vector<std::pair<double, int>> d(nc);
      for (int j = 0; j < nc; ++j) d[j] = {(fine_pts.row(i) - coarse_pts.row(j)).squaredNorm(), j};
      std::partial_sort(d.begin(), d.begin() + m, d.end());
      double wsum = 0.0;
      for (int t = 0; t < m; ++t) wsum += 1.0 / std::max(std::sqrt(d[t].first), 1e-12);
      idx[i] = d[s].second;
      wrow(0, i) = (1.0 / std::max(std::sqrt(d[s].first), 1e-12)) / wsum;
    }
    Var part = g.scale3(g.gather_points(coarse_feat, idx), g.constant(wrow));
    out = s == 0 ? part : g.add(out, part);
  }
  return out;
}

}  // namespace

void init_backbone_params(ParamStore& params, const BackboneConfig& cfg, geom::Rng& rng) {
  int in_ch = 1;
  for (std::size_t l = 0; l < cfg.widths.size(); ++l) {
    const int width = cfg.widths[l];
    const auto n = ec_names(static_cast<int>(l));
    params.create(n.w, vn_init(rng, width, 2 * in_ch, cfg.slope));
    params.create(n.u, vn_init(rng, width, width, cfg.slope));
    params.create(n.pool, vn_init(rng, width, width, cfg.slope));
    in_ch = width;
  }
  // up-path: fused width stays at the skip level's width except the last
  // fusion, which widens to the deepest width before the final projection
  int cur = cfg.widths.back();
  for (int l = static_cast<int>(cfg.widths.size()) - 2; l >= 0; --l) {
    const std::string base = "backbone.up" + std::to_string(l);
    const int out = l == 0 ? cfg.widths.back() : cfg.widths[l];
    params.create(base + ".w", vn_init(rng, out, cur + cfg.widths[l], cfg.slope));
    params.create(base + ".u", vn_init(rng, out, out, cfg.slope));
    cur = out;
  }
  params.create("backbone.final.w", vn_init(rng, cfg.channels, cfg.widths.back(), 0.0));
}

Var unet_forward(Graph& g, ParamStore& params, const Cloud& points, const BackboneConfig& cfg) {
  const int levels = static_cast<int>(cfg.widths.size());
  if (points.rows() < (1 << (levels - 1)))
    throw ShapeMismatch("unet_forward: cloud smaller than the downsampling pyramid");

  std::vector<Cloud> pts(levels);
  std::vector<std::vector<int>> sel(levels);
  pts[0] = points;
  for (int l = 1; l < levels; ++l) {
    const int n = static_cast<int>(pts[l - 1].rows());
    const int m = std::max(1, n / 2);
    sel[l] = geom::farthest_point_sample(pts[l - 1], m);
    Cloud sub(m, 3);
    for (int i = 0; i < m; ++i) sub.row(i) = pts[l - 1].row(sel[l][i]);
    pts[l] = std::move(sub);
  }

  // encoder
  std::vector<Var> enc(levels);
  Var f = g.constant(coords_feature(points));
  for (int l = 0; l < levels; ++l) {
    if (l > 0) f = g.gather_points(enc[l - 1], sel[l]);
    const auto n = ec_names(l);
    enc[l] = vn_edgeconv(g, f, level_knn(pts[l], cfg.knn), g.param(params, n.w),
                         g.param(params, n.u), g.param(params, n.pool), cfg.slope);
  }

  // decoder with skip concatenation
  Var cur = enc[levels - 1];
  for (int l = levels - 2; l >= 0; --l) {
    Var up = interpolate_up(g, cur, pts[l + 1], pts[l]);
    Var cat = g.concat_rows(up, enc[l]);
    const std::string base = "backbone.up" + std::to_string(l);
    cur = vn_leaky_relu(g, vn_linear(g, cat, g.param(params, base + ".w")),
                        g.param(params, base + ".u"), cfg.slope);
  }

  return vn_linear(g, cur, g.param(params, "backbone.final.w"));
}

}  // namespace cm::net
