#include "cm/ad/gradcheck.hpp"

#include <cmath>

namespace cm::ad {

double evaluate_with_gradients(const Computation& f, ParamStore& params) {
  params.zero_grad();
  Graph g;
  Var loss = f(g, params);
  const double value = g.scalar_value(loss);
  g.backward(loss);
  return value;
}

std::unordered_map<std::string, Mat> finite_difference_gradient(const Computation& f,
                                                                ParamStore& params, double step) {
  if (!(step > 0.0)) throw Error("finite_difference_gradient: step must be positive");
  std::unordered_map<std::string, Mat> out;
  auto eval = [&] {
    Graph g;
    return g.scalar_value(f(g, params));
  };
  for (const auto& name : params.names()) {
    Param& p = params.at(name);
    if (!p.requires_grad) continue;
    Mat fd = Mat::Zero(p.value.rows(), p.value.cols());
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double orig = p.value(i);
      p.value(i) = orig + step;
      const double hi = eval();
      p.value(i) = orig - step;
      const double lo = eval();
      p.value(i) = orig;
      fd(i) = (hi - lo) / (2.0 * step);
    }
    out[name] = std::move(fd);
  }
  return out;
}

GradientReport check_gradients(const Computation& f, ParamStore& params, double step,
                               double floor) {
  evaluate_with_gradients(f, params);
  std::unordered_map<std::string, Mat> analytic;
  for (const auto& name : params.names())
    if (params.at(name).requires_grad) analytic[name] = params.at(name).grad;
  const auto fd = finite_difference_gradient(f, params, step);

  GradientReport rep;
  for (const auto& [name, fdg] : fd) {
    const Mat& an = analytic.at(name);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < fdg.size(); ++i) {
      const double denom = std::max({std::abs(an(i)), std::abs(fdg(i)), floor});
      worst = std::max(worst, std::abs(an(i) - fdg(i)) / denom);
    }
    rep.max_rel_error[name] = worst;
    rep.worst = std::max(rep.worst, worst);
  }
  return rep;
}

}  // namespace cm::ad
