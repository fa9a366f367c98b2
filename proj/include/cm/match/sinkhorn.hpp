#pragma once

#include <vector>

#include "cm/ad/graph.hpp"

namespace cm::match {

// Optimal-transport layer over the dustbin-augmented cost. Marginal targets
// follow the matching-layer convention: each real point carries unit mass and
// each dustbin absorbs the other side's point count, so real rows and columns
// of exp(result) sum to 1 (within Sinkhorn convergence). All in log space.
// Returns log Z of shape (N+1) x (M+1).
ad::Var sinkhorn_log_assignment(ad::Graph& g, ad::Var cost, ad::Var dustbin, int iterations);

// Hard check of the AssignmentMatrix marginal contract on exponentiated values.
void assert_assignment_marginals(const Mat& z, double tol = 1e-5);

struct Match {
  int i = 0;
  int j = 0;
  double w = 0.0;
};

struct TopkResult {
  std::vector<Match> matches;   // descending weight, ties by (i, j)
  bool short_of_k = false;
};

TopkResult topk_correspondences(const Mat& z, int k);

}  // namespace cm::match
