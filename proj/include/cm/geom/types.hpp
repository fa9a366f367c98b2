#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace cm {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// Point clouds are (n x 3), one row per point.
using Cloud = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeMismatch : Error { using Error::Error; };
struct EmptyCloud : Error { using Error::Error; };
struct DegenerateInput : Error { using Error::Error; };
struct NonFiniteValue : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return R * x + t; }

  Cloud apply(const Cloud& pts) const {
    return (pts * R.transpose()).rowwise() + t.transpose();
  }

  RigidTransform inverse() const {
    return {R.transpose(), -(R.transpose() * t)};
  }

  // (a * b)(x) = a(b(x))
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    return {a.R * b.R, a.R * b.t + a.t};
  }
};

inline bool is_rotation(const Mat3& R, double tol = 1e-9) {
  return (R.transpose() * R - Mat3::Identity()).norm() < tol && R.determinant() > 0.0;
}

}  // namespace cm
