#pragma once

#include <vector>

#include "cm/ad/graph.hpp"
#include "cm/loss/correspondence.hpp"

namespace cm::loss {

struct LossConfig {
  double delta_p = 0.1;
  double delta_n = 1.4;
  double gamma = 24.0;
  double lambda_d = 0.1;
  double lambda_s = 0.5;
  double lambda_o = 0.5;
  bool plus_one = false;  // log(1 + sum*sum) comparison variant
};

// Mean over positive pairs of the Frobenius distance between ground-truth
// aligned per-point frames. frames_* are (3 x 3K) orientation fields; r_* are
// the ground-truth part rotations. Empty positives give 0 with a warning.
ad::Var orientation_loss(ad::Graph& g, ad::Var frames_p, ad::Var frames_q, const Mat3& r_p,
                         const Mat3& r_q, const std::vector<std::pair<int, int>>& positives);

// Circle loss over mating-surface anchors of both parts. desc_* are full-cloud
// descriptor matrices (K x d). With occupancy=false the pair statistic is the
// L2 distance of L2-normalized descriptors; with occupancy=true it is the L2
// norm of their sum, so opposite descriptors score as close. Anchors missing
// positives or negatives are skipped; zero-norm descriptors drop their point.
ad::Var circle_loss(ad::Graph& g, ad::Var desc_p, ad::Var desc_q, const CorrespondenceSet& corr,
                    const LossConfig& cfg, bool occupancy);

inline ad::Var shape_circle_loss(ad::Graph& g, ad::Var desc_p, ad::Var desc_q,
                                 const CorrespondenceSet& corr, const LossConfig& cfg) {
  return circle_loss(g, desc_p, desc_q, corr, cfg, false);
}
inline ad::Var occupancy_circle_loss(ad::Graph& g, ad::Var desc_p, ad::Var desc_q,
                                     const CorrespondenceSet& corr, const LossConfig& cfg) {
  return circle_loss(g, desc_p, desc_q, corr, cfg, true);
}

// Negative log likelihood of the ground-truth assignment: positives at their
// cells, non-mating points at their dustbins, probabilities floored at 1e-12.
// log_assign is the (N+1 x M+1) log assignment.
ad::Var point_matching_loss(ad::Graph& g, ad::Var log_assign, const CorrespondenceSet& corr);

ad::Var total_loss(ad::Graph& g, ad::Var l_d, ad::Var l_s, ad::Var l_o, ad::Var l_p,
                   const LossConfig& cfg);

// Eager wrappers over constant inputs, for tests and oracle comparisons.
double orientation_loss_value(const std::vector<Mat3>& fd_p, const std::vector<Mat3>& fd_q,
                              const Mat3& r_p, const Mat3& r_q,
                              const std::vector<std::pair<int, int>>& positives);
double shape_circle_loss_value(const Mat& desc_p, const Mat& desc_q,
                               const CorrespondenceSet& corr, const LossConfig& cfg);
double occupancy_circle_loss_value(const Mat& desc_p, const Mat& desc_q,
                                   const CorrespondenceSet& corr, const LossConfig& cfg);
double point_matching_loss_value(const Mat& assign, const CorrespondenceSet& corr);
double total_loss_value(double l_d, double l_s, double l_o, double l_p, const LossConfig& cfg);

}  // namespace cm::loss
