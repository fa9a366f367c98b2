#include "cm/geom/core.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cm::geom {

Mat3 gram_schmidt_frame(const Vec3& u, const Vec3& v, double eps) {
  const double nu = u.norm();
  if (nu < eps) throw DegenerateInput("gram_schmidt_frame: first axis norm below tolerance");
  const Vec3 x = u / nu;
  Vec3 w = v - v.dot(x) * x;
  const double nw = w.norm();
  if (nw < eps) throw DegenerateInput("gram_schmidt_frame: second axis parallel to first");
  const Vec3 y = w / nw;
  const Vec3 z = x.cross(y);
  Mat3 f;
  f.row(0) = x.transpose();
  f.row(1) = y.transpose();
  f.row(2) = z.transpose();
  return f;
}

KabschResult weighted_kabsch(const Cloud& src, const Cloud& tgt, const Vec& w) {
  if (src.rows() == 0) throw EmptyCloud("weighted_kabsch: empty input");
  if (src.rows() != tgt.rows() || src.rows() != w.size())
    throw ShapeMismatch("weighted_kabsch: source, target and weight sizes differ");
  const double wsum = w.sum();
  if (!(wsum > 0.0)) throw DegenerateInput("weighted_kabsch: weights sum to zero");

  const Vec3 cs = (src.transpose() * w) / wsum;
  const Vec3 ct = (tgt.transpose() * w) / wsum;
  Mat3 h = Mat3::Zero();
  for (Eigen::Index i = 0; i < src.rows(); ++i)
    h += w(i) * (src.row(i).transpose() - cs) * (tgt.row(i) - ct.transpose());
  h /= wsum;

  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sigma = svd.singularValues();

  KabschResult out;
  // rank < 2 leaves a rotation about the dominant axis (or everything) free
  const double scale = std::max(sigma(0), 1e-300);
  if (sigma(1) / scale < 1e-9) {
    out.degenerate = true;
    out.transform.R = Mat3::Identity();
    out.transform.t = ct - cs;
    return out;
  }

  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  out.transform.R = svd.matrixV() * d * svd.matrixU().transpose();
  out.transform.t = ct - out.transform.R * cs;
  return out;
}

namespace {

double directed_mean_sq(const Cloud& a, const Cloud& b) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      best = std::min(best, (a.row(i) - b.row(j)).squaredNorm());
    acc += best;
  }
  return acc / static_cast<double>(a.rows());
}

}  // namespace

double chamfer_distance(const Cloud& a, const Cloud& b) {
  if (a.rows() == 0 || b.rows() == 0) throw EmptyCloud("chamfer_distance: empty input");
  return 0.5 * (directed_mean_sq(a, b) + directed_mean_sq(b, a));
}

std::vector<int> farthest_point_sample(const Cloud& pts, int m) {
  const int n = static_cast<int>(pts.rows());
  if (n == 0) throw EmptyCloud("farthest_point_sample: empty input");
  if (m < 1 || m > n) throw ShapeMismatch("farthest_point_sample: sample size out of range");

  const Eigen::RowVector3d centroid = pts.colwise().mean();
  int start = 0;
  double best = -1.0;
  for (int i = 0; i < n; ++i) {
    const double d = (pts.row(i) - centroid).squaredNorm();
    if (d > best) {
      best = d;
      start = i;
    }
  }

  std::vector<int> sel;
  sel.reserve(m);
  sel.push_back(start);
  Vec dist = (pts.rowwise() - pts.row(start)).rowwise().squaredNorm();
  for (int s = 1; s < m; ++s) {
    int arg = 0;
    double far = -1.0;
    for (int i = 0; i < n; ++i) {
      if (dist(i) > far) {
        far = dist(i);
        arg = i;
      }
    }
    sel.push_back(arg);
    const Vec d2 = (pts.rowwise() - pts.row(arg)).rowwise().squaredNorm();
    dist = dist.cwiseMin(d2);
  }
  return sel;
}

std::vector<std::vector<int>> knn_graph(const Cloud& pts, int k) {
  const int n = static_cast<int>(pts.rows());
  if (n == 0) throw EmptyCloud("knn_graph: empty input");
  if (k < 1 || k >= n) throw ShapeMismatch("knn_graph: k must be in [1, n)");

  std::vector<std::vector<int>> out(n);
  std::vector<std::pair<double, int>> cand(n - 1);
  for (int i = 0; i < n; ++i) {
    int c = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      cand[c++] = {(pts.row(i) - pts.row(j)).squaredNorm(), j};
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    out[i].resize(k);
    for (int s = 0; s < k; ++s) out[i][s] = cand[s].second;
  }
  return out;
}

Mat3 random_rotation(Rng& rng) {
  Eigen::Vector4d q;
  for (int i = 0; i < 4; ++i) q(i) = rng.normal();
  q.normalize();
  const double w = q(0), x = q(1), y = q(2), z = q(3);
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Mat3 small_rotation(Rng& rng, double stddev_deg) {
  Vec3 axis;
  do {
    for (int i = 0; i < 3; ++i) axis(i) = rng.normal();
  } while (axis.norm() < 1e-12);
  axis.normalize();
  const double angle = rng.normal() * stddev_deg * M_PI / 180.0;
  return axis_angle(axis, angle);
}

Mat3 axis_angle(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

double rotation_angle_deg(const Mat3& a, const Mat3& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

}  // namespace cm::geom
