#include "cm/ad/param_store.hpp"

#include <cmath>

namespace cm::ad {

Param& ParamStore::create(const std::string& name, Mat value, bool requires_grad) {
  if (items_.count(name)) throw Error("ParamStore: duplicate parameter " + name);
  auto& p = items_[name];
  p.grad = Mat::Zero(value.rows(), value.cols());
  p.value = std::move(value);
  p.requires_grad = requires_grad;
  order_.push_back(name);
  return p;
}

Param& ParamStore::at(const std::string& name) {
  auto it = items_.find(name);
  if (it == items_.end()) throw Error("ParamStore: unknown parameter " + name);
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = items_.find(name);
  if (it == items_.end()) throw Error("ParamStore: unknown parameter " + name);
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& name : order_) n += items_.at(name).value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& name : order_) items_.at(name).grad.setZero();
}

double ParamStore::grad_norm() const {
  double acc = 0.0;
  for (const auto& name : order_) acc += items_.at(name).grad.squaredNorm();
  return std::sqrt(acc);
}

void ParamStore::clip_grad_norm(double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = grad_norm();
  if (n > max_norm) {
    const double s = max_norm / n;
    for (auto& name : order_) items_.at(name).grad *= s;
  }
}

}  // namespace cm::ad
