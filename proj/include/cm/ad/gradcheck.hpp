#pragma once

#include <functional>
#include <map>
#include <string>
#include <unordered_map>

#include "cm/ad/graph.hpp"

namespace cm::ad {

// A differentiable scalar computation over a parameter store. Inputs are
// captured by the callable as constants.
using Computation = std::function<Var(Graph&, ParamStore&)>;

// Builds the tape, runs backward, leaves gradients in the store. Returns the
// scalar value.
double evaluate_with_gradients(const Computation& f, ParamStore& params);

// Central differences (f(p+h) - f(p-h)) / 2h per coordinate of every
// requires_grad parameter.
std::unordered_map<std::string, Mat> finite_difference_gradient(const Computation& f,
                                                                ParamStore& params,
                                                                double step = 1e-4);

struct GradientReport {
  std::map<std::string, double> max_rel_error;  // per parameter
  double worst = 0.0;
};

// Relative error |analytic - fd| / max(|analytic|, |fd|, floor).
GradientReport check_gradients(const Computation& f, ParamStore& params, double step = 1e-4,
                               double floor = 1e-6);

}  // namespace cm::ad
