#pragma once

#include <utility>
#include <vector>

#include "cm/geom/types.hpp"

namespace cm::loss {

// Ground-truth supervision for one fragment pair. Indices refer to the full
// clouds; the circle-loss pair masks are restricted to the mating subsets.
struct CorrespondenceSet {
  std::vector<std::pair<int, int>> positives;  // assembled distance <= tau
  std::vector<int> mating_p;                   // sorted indices with >= 1 positive
  std::vector<int> mating_q;
  Mat pos_mask;  // |mating_p| x |mating_q|, 1 where the pair is a positive
  Mat neg_mask;  // 1 where assembled distance > 2*tau; (tau, 2*tau] is ignored
};

// Labels from assembled-frame coordinates: positives within tau, negatives
// beyond the 2*tau safe radius, anchors restricted to mating points.
CorrespondenceSet label_correspondences(const Cloud& p_assembled, const Cloud& q_assembled,
                                        double tau);

}  // namespace cm::loss
