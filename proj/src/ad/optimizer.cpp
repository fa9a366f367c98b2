#include "cm/ad/optimizer.hpp"

#include <cmath>

namespace cm::ad {

double cosine_lr(double base_lr, int epoch, int total_epochs) {
  if (total_epochs <= 1) return epoch == 0 ? base_lr : 0.0;
  const double x = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return base_lr * 0.5 * (1.0 + std::cos(M_PI * std::min(1.0, x)));
}

void AdamW::step(ParamStore& params, double lr_override) {
  const double lr = lr_override >= 0.0 ? lr_override : cfg_.lr;
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& name : params.names()) {
    Param& p = params.at(name);
    if (!p.requires_grad) continue;
    if (!p.grad.allFinite()) throw NonFiniteValue("optimizer step: non-finite gradient for " + name);
    auto& mo = state_[name];
    if (mo.m.size() == 0) {
      mo.m = Mat::Zero(p.value.rows(), p.value.cols());
      mo.v = Mat::Zero(p.value.rows(), p.value.cols());
    }
    if (mo.m.rows() != p.grad.rows() || mo.m.cols() != p.grad.cols())
      throw ShapeMismatch("optimizer step: gradient shape changed for " + name);
    mo.m = cfg_.beta1 * mo.m + (1.0 - cfg_.beta1) * p.grad;
    mo.v = cfg_.beta2 * mo.v + (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad);
    const Mat mhat = mo.m / bc1;
    const Mat vhat = mo.v / bc2;
    p.value -= lr * (mhat.array() / (vhat.array().sqrt() + cfg_.eps)).matrix();
    if (cfg_.weight_decay > 0.0) p.value -= lr * cfg_.weight_decay * p.value;
  }
}

}  // namespace cm::ad
