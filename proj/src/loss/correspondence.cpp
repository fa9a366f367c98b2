#include "cm/loss/correspondence.hpp"

namespace cm::loss {

CorrespondenceSet label_correspondences(const Cloud& p_assembled, const Cloud& q_assembled,
                                        double tau) {
  const int n = static_cast<int>(p_assembled.rows());
  const int m = static_cast<int>(q_assembled.rows());
  CorrespondenceSet out;

  Mat d2(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) d2(i, j) = (p_assembled.row(i) - q_assembled.row(j)).squaredNorm();

  const double tau2 = tau * tau;
  std::vector<bool> mate_p(n, false), mate_q(m, false);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (d2(i, j) <= tau2) {
        out.positives.push_back({i, j});
        mate_p[i] = true;
        mate_q[j] = true;
      }
  for (int i = 0; i < n; ++i)
    if (mate_p[i]) out.mating_p.push_back(i);
  for (int j = 0; j < m; ++j)
    if (mate_q[j]) out.mating_q.push_back(j);

  const double safe2 = 4.0 * tau2;
  const int a = static_cast<int>(out.mating_p.size());
  const int b = static_cast<int>(out.mating_q.size());
  out.pos_mask = Mat::Zero(a, b);
  out.neg_mask = Mat::Zero(a, b);
  for (int r = 0; r < a; ++r)
    for (int c = 0; c < b; ++c) {
      const double d = d2(out.mating_p[r], out.mating_q[c]);
      if (d <= tau2)
        out.pos_mask(r, c) = 1.0;
      else if (d > safe2)
        out.neg_mask(r, c) = 1.0;
    }
  return out;
}

}  // namespace cm::loss
