#pragma once

#include <vector>

#include "cm/geom/types.hpp"
#include "cm/loss/correspondence.hpp"
#include "cm/loss/losses.hpp"

// Brute-force reference implementations, deliberately loop-based and separate
// from the production code paths they check. Slow by design.
namespace cm::oracle {

// Direct double-loop transcription of the circle loss over both parts'
// anchors. occupancy=true scores pairs by the norm of the summed unit
// descriptors instead of their difference.
double oracle_circle_loss(const Mat& desc_p, const Mat& desc_q,
                          const loss::CorrespondenceSet& corr, const loss::LossConfig& cfg,
                          bool occupancy);

// Weighted rigid alignment by grid search over Euler angles with local
// refinement; translation closed-form per candidate rotation. At most 5
// points.
RigidTransform oracle_kabsch(const Cloud& src, const Cloud& tgt, const Vec& weights);

// Log-domain Sinkhorn at extended precision for a high iteration count.
// Returns exponentiated assignment probabilities of shape (n+1) x (m+1).
Mat oracle_assignment(const Mat& cost, double dustbin, int iterations = 10000);

// Exhaustive nearest neighbors, ties by lower index.
std::vector<std::vector<int>> oracle_knn(const Cloud& points, int k);

// Greedy farthest point replay with explicit distance table.
std::vector<int> oracle_fps(const Cloud& points, int count);

}  // namespace cm::oracle
