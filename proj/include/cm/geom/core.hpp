#pragma once

#include <vector>

#include "cm/geom/rng.hpp"
#include "cm/geom/types.hpp"

namespace cm::geom {

/// Orthonormal frame from two direction candidates. Rows of the result hold
/// the x, y, z axes: x = u/|u|, y = normalized rejection of v from x, z = x cross y.
/// Throws DegenerateInput if |u| or the rejection norm falls below eps.
Mat3 gram_schmidt_frame(const Vec3& u, const Vec3& v, double eps = 1e-8);

struct KabschResult {
  RigidTransform transform;
  bool degenerate = false;  // collinear or coincident sources; R = I, t = centroid shift
};

/// Weighted least-squares rigid fit: argmin_{R,t} sum_i w_i |R src_i + t - tgt_i|^2,
/// det(R) = +1 enforced by negating the singular vector of the smallest singular value.
KabschResult weighted_kabsch(const Cloud& src, const Cloud& tgt, const Vec& w);

/// Symmetric chamfer: half the sum of both directed mean squared
/// nearest-neighbor distances.
double chamfer_distance(const Cloud& a, const Cloud& b);

/// Farthest point sampling. Starts from the point farthest from the centroid
/// (lowest index on ties) and greedily adds the point maximizing the distance
/// to the selected set. Returns m indices in selection order.
std::vector<int> farthest_point_sample(const Cloud& pts, int m);

/// k nearest neighbors per point, self excluded, ties broken by lower index.
/// Row i lists the neighbor indices of point i sorted by ascending distance.
std::vector<std::vector<int>> knn_graph(const Cloud& pts, int k);

/// Haar-uniform random rotation from a normalized quaternion of four normals.
Mat3 random_rotation(Rng& rng);

/// Rotation about a Haar-uniform axis by a normal angle with the given stddev
/// (degrees). Used to inject calibrated noise into pose graphs.
Mat3 small_rotation(Rng& rng, double stddev_deg);

Mat3 axis_angle(const Vec3& axis, double angle_rad);

/// Relative rotation angle in degrees, acos((trace(Ra^T Rb) - 1) / 2).
double rotation_angle_deg(const Mat3& a, const Mat3& b);

}  // namespace cm::geom
