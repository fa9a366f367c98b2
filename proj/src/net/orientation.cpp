#include "cm/net/orientation.hpp"

#include <cmath>

#include "cm/net/vn.hpp"

namespace cm::net {

using ad::Graph;
using ad::ParamStore;
using ad::Var;

void init_hypothesizer_params(ParamStore& params, int channels, geom::Rng& rng) {
  params.create("hyp.w", vn_init(rng, 2, channels, 0.0));
}

namespace {

// fixed perturbation orthogonal to x: cross with the axis least aligned to x
Vec3 orthogonal_direction(const Vec3& x) {
  int a = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(x(i)) < std::abs(x(a))) a = i;
  Vec3 e = Vec3::Zero();
  e(a) = 1.0;
  Vec3 d = x.cross(e);
  const double n = d.norm();
  return n > 0.0 ? Vec3(d / n) : Vec3(0, 0, 1);
}

}  // namespace

OrientationField hypothesize_orientation(Graph& g, ParamStore& params, Var f_eqv, double eps) {
  Var cand = vn_linear(g, f_eqv, g.param(params, "hyp.w"));
  const Eigen::Index k = g.value(cand).cols() / 3;

  Var u = g.slice_rows(cand, 0, 1);
  Var v = g.slice_rows(cand, 1, 1);

  // host-side degeneracy scan on candidate values, fixed nudge on failures
  const Mat& uv = g.value(u);
  const Mat& vv = g.value(v);
  Mat nudge = Mat::Zero(1, 3 * k);
  bool nudged = false;
  for (Eigen::Index p = 0; p < k; ++p) {
    const Vec3 up = uv.middleCols(3 * p, 3).transpose();
    const Vec3 vp = vv.middleCols(3 * p, 3).transpose();
    const double nu = up.norm();
    bool bad = nu < eps;
    if (!bad) {
      const Vec3 x = up / nu;
      bad = (vp - vp.dot(x) * x).norm() < eps;
    }
    if (bad) {
      const Vec3 x = nu < eps ? Vec3(1, 0, 0) : Vec3(up / nu);
      nudge.middleCols(3 * p, 3) = 1e-6 * orthogonal_direction(x).transpose();
      nudged = true;
    }
  }
  if (nudged) {
    v = g.add(v, g.constant(nudge));
    const Mat& uv2 = g.value(u);
    const Mat& vv2 = g.value(v);
    for (Eigen::Index p = 0; p < k; ++p) {
      const Vec3 up = uv2.middleCols(3 * p, 3).transpose();
      const Vec3 vp = vv2.middleCols(3 * p, 3).transpose();
      const double nu = up.norm();
      if (nu < eps) throw DegenerateFrame("hypothesize_orientation: x candidate vanished");
      const Vec3 x = up / nu;
      if ((vp - vp.dot(x) * x).norm() < eps)
        throw DegenerateFrame("hypothesize_orientation: y candidate parallel to x after retry");
    }
  }

  OrientationField out;
  out.mag_x = g.sqrt_(g.clamp_min(g.dot3(u, u), 1e-24));
  out.mag_y = g.sqrt_(g.clamp_min(g.dot3(v, v), 1e-24));

  Var ones = g.constant(Mat::Ones(1, k));
  Var xhat = g.scale3(u, g.div(ones, out.mag_x));
  Var proj = g.dot3(v, xhat);
  Var w = g.sub(v, g.scale3(xhat, proj));
  Var nw = g.sqrt_(g.clamp_min(g.dot3(w, w), 1e-24));
  Var yhat = g.scale3(w, g.div(ones, nw));
  Var zhat = g.cross3(xhat, yhat);
  out.frames = g.concat_rows(xhat, g.concat_rows(yhat, zhat));
  return out;
}

Var invariant_features(Graph& g, Var f_eqv, Var frames) {
  return g.frame_project(f_eqv, frames);
}

}  // namespace cm::net
