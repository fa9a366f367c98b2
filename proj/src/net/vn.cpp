#include "cm/net/vn.hpp"

#include <cmath>

namespace cm::net {

using ad::Graph;
using ad::Var;

Var vn_linear(Graph& g, Var f, Var w) { return g.matmul(w, f); }

Var vn_leaky_relu(Graph& g, Var f, Var dir_w, double slope) {
  Var k = g.matmul(dir_w, f);
  Var k2 = g.clamp_min(g.dot3(k, k), 1e-24);
  Var t = g.relu(g.neg(g.dot3(f, k)));
  return g.add(f, g.scale3(k, g.scale(g.div(t, k2), 1.0 - slope)));
}

Var vn_edgeconv(Graph& g, Var f, const std::vector<std::vector<int>>& nbrs, Var w, Var dir_w,
                Var pool_w, double slope) {
  const int n = static_cast<int>(nbrs.size());
  if (n == 0) throw EmptyCloud("vn_edgeconv: empty neighbor graph");
  const int k = static_cast<int>(nbrs[0].size());
  std::vector<int> centers, neighbors;
  centers.reserve(static_cast<std::size_t>(n) * k);
  neighbors.reserve(static_cast<std::size_t>(n) * k);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(nbrs[i].size()) != k)
      throw ShapeMismatch("vn_edgeconv: ragged neighbor lists");
    for (int e = 0; e < k; ++e) {
      centers.push_back(i);
      neighbors.push_back(nbrs[i][e]);
    }
  }

  Var fc = g.gather_points(f, centers);
  Var fn = g.gather_points(f, neighbors);
  Var edge = g.concat_rows(fc, g.sub(fn, fc));
  Var h = vn_leaky_relu(g, vn_linear(g, edge, w), dir_w, slope);

  Var mean = g.group_mean3(h, k);
  Var dir = g.matmul(pool_w, mean);
  Var dir_per_edge = g.gather_points(dir, centers);
  Var score = g.dot3(h, dir_per_edge);
  return g.group_max3(h, score, k);
}

Mat vn_init(geom::Rng& rng, int rows, int cols, double slope) {
  const double gain = std::sqrt(2.0 / (1.0 + slope * slope));
  const double std = gain / std::sqrt(static_cast<double>(cols));
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal() * std;
  return m;
}

}  // namespace cm::net
