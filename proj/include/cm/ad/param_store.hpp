#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "cm/geom/types.hpp"

namespace cm::ad {

struct Param {
  Mat value;
  Mat grad;
  bool requires_grad = true;
};

// Named parameter set with stable insertion order, shared by the graph,
// the optimizer and checkpoint io.
class ParamStore {
 public:
  Param& create(const std::string& name, Mat value, bool requires_grad = true);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return items_.count(name) != 0; }

  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  double grad_norm() const;
  void clip_grad_norm(double max_norm);

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, Param> items_;
};

}  // namespace cm::ad
