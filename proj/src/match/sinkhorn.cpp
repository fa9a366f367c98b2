#include "cm/match/sinkhorn.hpp"

#include <algorithm>
#include <cmath>

namespace cm::match {

using ad::Graph;
using ad::Var;

Var sinkhorn_log_assignment(Graph& g, Var cost, Var dustbin, int iterations) {
  if (iterations < 1) throw Error("sinkhorn: iterations must be >= 1");
  const Eigen::Index n = g.value(cost).rows();
  const Eigen::Index m = g.value(cost).cols();

  Var caug = g.pad_dustbin(cost, dustbin);

  Mat la = Mat::Zero(n + 1, 1);
  la(n, 0) = std::log(static_cast<double>(m));
  Mat lb = Mat::Zero(1, m + 1);
  lb(0, m) = std::log(static_cast<double>(n));
  Var log_a = g.constant(la);
  Var log_b = g.constant(lb);

  Var u = g.constant(Mat::Zero(n + 1, 1));
  Var v = g.constant(Mat::Zero(1, m + 1));
  for (int it = 0; it < iterations; ++it) {
    u = g.sub(log_a, g.lse_rows(caug, v));
    v = g.sub(log_b, g.lse_cols(caug, u));
  }
  return g.add_rowvec(g.add_colvec(caug, u), v);
}

void assert_assignment_marginals(const Mat& z, double tol) {
  const Eigen::Index n = z.rows() - 1, m = z.cols() - 1;
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(z.row(i).sum() - 1.0) > tol)
      throw Error("assignment matrix: row marginal violated at row " + std::to_string(i));
  for (Eigen::Index j = 0; j < m; ++j)
    if (std::abs(z.col(j).sum() - 1.0) > tol)
      throw Error("assignment matrix: column marginal violated at column " + std::to_string(j));
}

TopkResult topk_correspondences(const Mat& z, int k) {
  if (k < 1) throw Error("topk_correspondences: k must be >= 1");
  const Eigen::Index n = z.rows() - 1, m = z.cols() - 1;
  std::vector<Match> cells;
  cells.reserve(static_cast<std::size_t>(n) * m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      cells.push_back({static_cast<int>(i), static_cast<int>(j), z(i, j)});
  std::sort(cells.begin(), cells.end(), [](const Match& a, const Match& b) {
    if (a.w != b.w) return a.w > b.w;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  TopkResult out;
  if (static_cast<int>(cells.size()) < k) {
    out.short_of_k = true;
    out.matches = std::move(cells);
  } else {
    out.matches.assign(cells.begin(), cells.begin() + k);
  }
  return out;
}

}  // namespace cm::match
