#include "cm/ad/graph.hpp"

#include <algorithm>
#include <cmath>

namespace cm::ad {

namespace {

void require(bool ok, const char* op, const char* what) {
  if (!ok) throw ShapeMismatch(std::string(op) + ": " + what);
}

}  // namespace

Var Graph::push(const char* op, Mat val, bool needs_grad, std::function<void()> back) {
  if (check_finite_ && !val.allFinite())
    throw NonFiniteValue(std::string("non-finite value produced by ") + op);
  Node n;
  n.val = std::move(val);
  n.back = std::move(back);
  n.op = op;
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Mat& Graph::gref(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
  return n.grad;
}

void Graph::acc(Var v, const Mat& g) {
  if (nodes_[v.id].needs_grad) gref(v) += g;
}

const Mat& Graph::value(Var v) const { return nodes_.at(v.id).val; }

double Graph::scalar_value(Var v) const {
  const Mat& m = value(v);
  require(m.size() == 1, "scalar_value", "not a 1x1 value");
  return m(0, 0);
}

Mat Graph::grad_of(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.size() == 0) return Mat::Zero(n.val.rows(), n.val.cols());
  return n.grad;
}

void Graph::backward(Var loss) {
  require(value(loss).size() == 1, "backward", "loss must be 1x1");
  gref(loss)(0, 0) += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.bound) n.bound->grad += n.grad;
    if (n.back) n.back();
  }
}

Var Graph::constant(Mat v) { return push("constant", std::move(v), false, nullptr); }

Var Graph::param(ParamStore& store, const std::string& name) {
  auto it = param_vars_.find(name);
  if (it != param_vars_.end()) return Var{it->second};
  Param& p = store.at(name);
  Var v = push("param", p.value, p.requires_grad, nullptr);
  nodes_[v.id].bound = p.requires_grad ? &p : nullptr;
  param_vars_[name] = v.id;
  return v;
}

Var Graph::add(Var a, Var b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(), "add", "shape mismatch");
  bool ng = wants(a) || wants(b);
  Var out = push("add", val(a) + val(b), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, b, out] {
    acc(a, nodes_[out.id].grad);
    acc(b, nodes_[out.id].grad);
  };
  return out;
}

Var Graph::sub(Var a, Var b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(), "sub", "shape mismatch");
  bool ng = wants(a) || wants(b);
  Var out = push("sub", val(a) - val(b), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, b, out] {
    acc(a, nodes_[out.id].grad);
    acc(b, -nodes_[out.id].grad);
  };
  return out;
}

Var Graph::mul(Var a, Var b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(), "mul", "shape mismatch");
  bool ng = wants(a) || wants(b);
  Var out = push("mul", val(a).cwiseProduct(val(b)), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, b, out] {
    acc(a, nodes_[out.id].grad.cwiseProduct(val(b)));
    acc(b, nodes_[out.id].grad.cwiseProduct(val(a)));
  };
  return out;
}

Var Graph::div(Var a, Var b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(), "div", "shape mismatch");
  bool ng = wants(a) || wants(b);
  Var out = push("div", val(a).cwiseQuotient(val(b)), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, b, out] {
    const Mat& g = nodes_[out.id].grad;
    acc(a, g.cwiseQuotient(val(b)));
    acc(b, -g.cwiseProduct(nodes_[out.id].val).cwiseQuotient(val(b)));
  };
  return out;
}

Var Graph::add_rowvec(Var a, Var r) {
  require(val(r).rows() == 1 && val(r).cols() == val(a).cols(), "add_rowvec", "row vector mismatch");
  bool ng = wants(a) || wants(r);
  Mat v = val(a);
  v.rowwise() += val(r).row(0);
  Var out = push("add_rowvec", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, r, out] {
    acc(a, nodes_[out.id].grad);
    acc(r, nodes_[out.id].grad.colwise().sum());
  };
  return out;
}

Var Graph::sub_rowvec(Var a, Var r) {
  require(val(r).rows() == 1 && val(r).cols() == val(a).cols(), "sub_rowvec", "row vector mismatch");
  bool ng = wants(a) || wants(r);
  Mat v = val(a);
  v.rowwise() -= val(r).row(0);
  Var out = push("sub_rowvec", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, r, out] {
    acc(a, nodes_[out.id].grad);
    acc(r, -nodes_[out.id].grad.colwise().sum());
  };
  return out;
}

Var Graph::mul_rowvec(Var a, Var r) {
  require(val(r).rows() == 1 && val(r).cols() == val(a).cols(), "mul_rowvec", "row vector mismatch");
  bool ng = wants(a) || wants(r);
  Mat v = val(a).array().rowwise() * val(r).row(0).array();
  Var out = push("mul_rowvec", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, r, out] {
    const Mat& g = nodes_[out.id].grad;
    acc(a, g.array().rowwise() * val(r).row(0).array());
    acc(r, g.cwiseProduct(val(a)).colwise().sum());
  };
  return out;
}

Var Graph::div_rowvec(Var a, Var r) {
  require(val(r).rows() == 1 && val(r).cols() == val(a).cols(), "div_rowvec", "row vector mismatch");
  bool ng = wants(a) || wants(r);
  Mat v = val(a).array().rowwise() / val(r).row(0).array();
  Var out = push("div_rowvec", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, r, out] {
    const Mat& g = nodes_[out.id].grad;
    acc(a, g.array().rowwise() / val(r).row(0).array());
    Mat gr = -(g.cwiseProduct(nodes_[out.id].val)).colwise().sum();
    acc(r, gr.array().rowwise() / val(r).row(0).array());
  };
  return out;
}

Var Graph::add_colvec(Var a, Var c) {
  require(val(c).cols() == 1 && val(c).rows() == val(a).rows(), "add_colvec", "col vector mismatch");
  bool ng = wants(a) || wants(c);
  Mat v = val(a);
  v.colwise() += val(c).col(0);
  Var out = push("add_colvec", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, c, out] {
    acc(a, nodes_[out.id].grad);
    acc(c, nodes_[out.id].grad.rowwise().sum());
  };
  return out;
}

Var Graph::mul_colvec(Var a, Var c) {
  require(val(c).cols() == 1 && val(c).rows() == val(a).rows(), "mul_colvec", "col vector mismatch");
  bool ng = wants(a) || wants(c);
  Mat v = val(a).array().colwise() * val(c).col(0).array();
  Var out = push("mul_colvec", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, c, out] {
    const Mat& g = nodes_[out.id].grad;
    acc(a, g.array().colwise() * val(c).col(0).array());
    acc(c, g.cwiseProduct(val(a)).rowwise().sum());
  };
  return out;
}

Var Graph::div_colvec(Var a, Var c) {
  require(val(c).cols() == 1 && val(c).rows() == val(a).rows(), "div_colvec", "col vector mismatch");
  bool ng = wants(a) || wants(c);
  Mat v = val(a).array().colwise() / val(c).col(0).array();
  Var out = push("div_colvec", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, c, out] {
    const Mat& g = nodes_[out.id].grad;
    acc(a, g.array().colwise() / val(c).col(0).array());
    Mat gc = -(g.cwiseProduct(nodes_[out.id].val)).rowwise().sum();
    acc(c, gc.array().colwise() / val(c).col(0).array());
  };
  return out;
}

Var Graph::scale(Var a, double s) {
  bool ng = wants(a);
  Var out = push("scale", val(a) * s, ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, s, out] { acc(a, nodes_[out.id].grad * s); };
  return out;
}

Var Graph::add_scalar(Var a, double c) {
  bool ng = wants(a);
  Var out = push("add_scalar", val(a).array() + c, ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out] { acc(a, nodes_[out.id].grad); };
  return out;
}

Var Graph::exp_(Var a) {
  bool ng = wants(a);
  Var out = push("exp", val(a).array().exp(), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out] {
    acc(a, nodes_[out.id].grad.cwiseProduct(nodes_[out.id].val));
  };
  return out;
}

Var Graph::log_(Var a) {
  bool ng = wants(a);
  Var out = push("log", val(a).array().log(), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out] {
    acc(a, nodes_[out.id].grad.cwiseQuotient(val(a)));
  };
  return out;
}

Var Graph::sqrt_(Var a) {
  bool ng = wants(a);
  Var out = push("sqrt", val(a).array().sqrt(), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out] {
    acc(a, (nodes_[out.id].grad.array() * 0.5 / nodes_[out.id].val.array()).matrix());
  };
  return out;
}

Var Graph::tanh_(Var a) {
  bool ng = wants(a);
  Var out = push("tanh", val(a).array().tanh(), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out] {
    const Mat& y = nodes_[out.id].val;
    acc(a, nodes_[out.id].grad.cwiseProduct((1.0 - y.array().square()).matrix()));
  };
  return out;
}

Var Graph::sigmoid(Var a) {
  bool ng = wants(a);
  Mat v = val(a).unaryExpr([](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  Var out = push("sigmoid", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out] {
    const Mat& y = nodes_[out.id].val;
    acc(a, nodes_[out.id].grad.cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  };
  return out;
}

Var Graph::leaky_relu(Var a, double slope) {
  bool ng = wants(a);
  Mat v = val(a).unaryExpr([slope](double x) { return x >= 0.0 ? x : slope * x; });
  Var out = push("leaky_relu", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, slope, out] {
    Mat m = val(a).unaryExpr([slope](double x) { return x >= 0.0 ? 1.0 : slope; });
    acc(a, nodes_[out.id].grad.cwiseProduct(m));
  };
  return out;
}

Var Graph::clamp_min(Var a, double lo) {
  bool ng = wants(a);
  Var out = push("clamp_min", val(a).cwiseMax(lo), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, lo, out] {
    Mat m = val(a).unaryExpr([lo](double x) { return x > lo ? 1.0 : 0.0; });
    acc(a, nodes_[out.id].grad.cwiseProduct(m));
  };
  return out;
}

Var Graph::matmul(Var a, Var b) {
  require(val(a).cols() == val(b).rows(), "matmul", "inner dimensions differ");
  bool ng = wants(a) || wants(b);
  Var out = push("matmul", val(a) * val(b), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, b, out] {
    const Mat& g = nodes_[out.id].grad;
    acc(a, g * val(b).transpose());
    acc(b, val(a).transpose() * g);
  };
  return out;
}

Var Graph::matmul_nt(Var a, Var b) {
  require(val(a).cols() == val(b).cols(), "matmul_nt", "inner dimensions differ");
  bool ng = wants(a) || wants(b);
  Var out = push("matmul_nt", val(a) * val(b).transpose(), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, b, out] {
    const Mat& g = nodes_[out.id].grad;
    acc(a, g * val(b));
    acc(b, g.transpose() * val(a));
  };
  return out;
}

Var Graph::transpose(Var a) {
  bool ng = wants(a);
  Var out = push("transpose", val(a).transpose(), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out] { acc(a, nodes_[out.id].grad.transpose()); };
  return out;
}

Var Graph::sum_all(Var a) {
  bool ng = wants(a);
  Var out = push("sum_all", Mat::Constant(1, 1, val(a).sum()), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out] {
    acc(a, Mat::Constant(val(a).rows(), val(a).cols(), nodes_[out.id].grad(0, 0)));
  };
  return out;
}

Var Graph::mean_all(Var a) {
  bool ng = wants(a);
  Var out = push("mean_all", Mat::Constant(1, 1, val(a).mean()), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out] {
    const double s = nodes_[out.id].grad(0, 0) / static_cast<double>(val(a).size());
    acc(a, Mat::Constant(val(a).rows(), val(a).cols(), s));
  };
  return out;
}

Var Graph::rowwise_sum(Var a) {
  bool ng = wants(a);
  Var out = push("rowwise_sum", val(a).rowwise().sum(), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out] {
    acc(a, nodes_[out.id].grad * Mat::Ones(1, val(a).cols()));
  };
  return out;
}

Var Graph::colwise_sum(Var a) {
  bool ng = wants(a);
  Var out = push("colwise_sum", val(a).colwise().sum(), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out] {
    acc(a, Mat::Ones(val(a).rows(), 1) * nodes_[out.id].grad);
  };
  return out;
}

Var Graph::colwise_mean(Var a) {
  bool ng = wants(a);
  Var out = push("colwise_mean", val(a).colwise().mean(), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out] {
    acc(a, Mat::Ones(val(a).rows(), 1) * nodes_[out.id].grad / static_cast<double>(val(a).rows()));
  };
  return out;
}

Var Graph::colwise_max(Var a) {
  bool ng = wants(a);
  const Mat& x = val(a);
  Mat v(1, x.cols());
  std::vector<int> arg(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Eigen::Index r = 0;
    x.col(j).maxCoeff(&r);
    arg[j] = static_cast<int>(r);
    v(0, j) = x(r, j);
  }
  Var out = push("colwise_max", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out, arg = std::move(arg)] {
    Mat g = Mat::Zero(val(a).rows(), val(a).cols());
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(arg[j], j) = nodes_[out.id].grad(0, j);
    acc(a, g);
  };
  return out;
}

Var Graph::concat_rows(Var a, Var b) {
  require(val(a).cols() == val(b).cols(), "concat_rows", "column counts differ");
  bool ng = wants(a) || wants(b);
  Mat v(val(a).rows() + val(b).rows(), val(a).cols());
  v.topRows(val(a).rows()) = val(a);
  v.bottomRows(val(b).rows()) = val(b);
  Var out = push("concat_rows", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, b, out] {
    const Mat& g = nodes_[out.id].grad;
    acc(a, g.topRows(val(a).rows()));
    acc(b, g.bottomRows(val(b).rows()));
  };
  return out;
}

Var Graph::concat_cols(Var a, Var b) {
  require(val(a).rows() == val(b).rows(), "concat_cols", "row counts differ");
  bool ng = wants(a) || wants(b);
  Mat v(val(a).rows(), val(a).cols() + val(b).cols());
  v.leftCols(val(a).cols()) = val(a);
  v.rightCols(val(b).cols()) = val(b);
  Var out = push("concat_cols", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, b, out] {
    const Mat& g = nodes_[out.id].grad;
    acc(a, g.leftCols(val(a).cols()));
    acc(b, g.rightCols(val(b).cols()));
  };
  return out;
}

Var Graph::slice_rows(Var a, int r0, int len) {
  require(r0 >= 0 && len >= 0 && r0 + len <= val(a).rows(), "slice_rows", "range out of bounds");
  bool ng = wants(a);
  Var out = push("slice_rows", val(a).middleRows(r0, len), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, r0, len, out] {
    Mat g = Mat::Zero(val(a).rows(), val(a).cols());
    g.middleRows(r0, len) = nodes_[out.id].grad;
    acc(a, g);
  };
  return out;
}

Var Graph::slice_cols(Var a, int c0, int len) {
  require(c0 >= 0 && len >= 0 && c0 + len <= val(a).cols(), "slice_cols", "range out of bounds");
  bool ng = wants(a);
  Var out = push("slice_cols", val(a).middleCols(c0, len), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, c0, len, out] {
    Mat g = Mat::Zero(val(a).rows(), val(a).cols());
    g.middleCols(c0, len) = nodes_[out.id].grad;
    acc(a, g);
  };
  return out;
}

Var Graph::gather_rows(Var a, std::vector<int> idx) {
  for (int i : idx) require(i >= 0 && i < val(a).rows(), "gather_rows", "index out of bounds");
  bool ng = wants(a);
  Mat v(static_cast<Eigen::Index>(idx.size()), val(a).cols());
  for (std::size_t r = 0; r < idx.size(); ++r) v.row(r) = val(a).row(idx[r]);
  Var out = push("gather_rows", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out, idx = std::move(idx)] {
    Mat g = Mat::Zero(val(a).rows(), val(a).cols());
    for (std::size_t r = 0; r < idx.size(); ++r) g.row(idx[r]) += nodes_[out.id].grad.row(r);
    acc(a, g);
  };
  return out;
}

Var Graph::gather_cells(Var a, std::vector<std::pair<int, int>> cells) {
  for (auto& [i, j] : cells)
    require(i >= 0 && i < val(a).rows() && j >= 0 && j < val(a).cols(), "gather_cells",
            "cell out of bounds");
  bool ng = wants(a);
  Mat v(static_cast<Eigen::Index>(cells.size()), 1);
  for (std::size_t r = 0; r < cells.size(); ++r) v(r, 0) = val(a)(cells[r].first, cells[r].second);
  Var out = push("gather_cells", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out, cells = std::move(cells)] {
    Mat g = Mat::Zero(val(a).rows(), val(a).cols());
    for (std::size_t r = 0; r < cells.size(); ++r)
      g(cells[r].first, cells[r].second) += nodes_[out.id].grad(r, 0);
    acc(a, g);
  };
  return out;
}

Var Graph::gather_points(Var a, std::vector<int> idx) {
  require(val(a).cols() % 3 == 0, "gather_points", "columns not a multiple of 3");
  const int k = static_cast<int>(val(a).cols()) / 3;
  for (int i : idx) require(i >= 0 && i < k, "gather_points", "index out of bounds");
  bool ng = wants(a);
  Mat v(val(a).rows(), static_cast<Eigen::Index>(idx.size()) * 3);
  for (std::size_t p = 0; p < idx.size(); ++p)
    v.middleCols(3 * p, 3) = val(a).middleCols(3 * idx[p], 3);
  Var out = push("gather_points", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, out, idx = std::move(idx)] {
    Mat g = Mat::Zero(val(a).rows(), val(a).cols());
    for (std::size_t p = 0; p < idx.size(); ++p)
      g.middleCols(3 * idx[p], 3) += nodes_[out.id].grad.middleCols(3 * p, 3);
    acc(a, g);
  };
  return out;
}

Var Graph::dot3(Var a, Var b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(), "dot3", "shape mismatch");
  require(val(a).cols() % 3 == 0, "dot3", "columns not a multiple of 3");
  const Eigen::Index k = val(a).cols() / 3;
  bool ng = wants(a) || wants(b);
  Mat v(val(a).rows(), k);
  for (Eigen::Index p = 0; p < k; ++p)
    v.col(p) = (val(a).middleCols(3 * p, 3).array() * val(b).middleCols(3 * p, 3).array())
                   .rowwise()
                   .sum();
  Var out = push("dot3", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, b, k, out] {
    const Mat& g = nodes_[out.id].grad;
    Mat ga = Mat::Zero(val(a).rows(), val(a).cols());
    Mat gb = Mat::Zero(val(b).rows(), val(b).cols());
    for (Eigen::Index p = 0; p < k; ++p) {
      ga.middleCols(3 * p, 3) = val(b).middleCols(3 * p, 3).array().colwise() * g.col(p).array();
      gb.middleCols(3 * p, 3) = val(a).middleCols(3 * p, 3).array().colwise() * g.col(p).array();
    }
    acc(a, ga);
    acc(b, gb);
  };
  return out;
}

Var Graph::scale3(Var a, Var s) {
  require(val(a).cols() % 3 == 0, "scale3", "columns not a multiple of 3");
  const Eigen::Index k = val(a).cols() / 3;
  require(val(s).cols() == k, "scale3", "scale column count mismatch");
  const bool bcast = val(s).rows() == 1;
  require(bcast || val(s).rows() == val(a).rows(), "scale3", "scale row count mismatch");
  bool ng = wants(a) || wants(s);
  Mat v(val(a).rows(), val(a).cols());
  for (Eigen::Index p = 0; p < k; ++p) {
    if (bcast)
      v.middleCols(3 * p, 3) = val(a).middleCols(3 * p, 3) * val(s)(0, p);
    else
      v.middleCols(3 * p, 3) =
          val(a).middleCols(3 * p, 3).array().colwise() * val(s).col(p).array();
  }
  Var out = push("scale3", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, s, k, bcast, out] {
    const Mat& g = nodes_[out.id].grad;
    Mat ga = Mat::Zero(val(a).rows(), val(a).cols());
    Mat gs = Mat::Zero(val(s).rows(), val(s).cols());
    for (Eigen::Index p = 0; p < k; ++p) {
      const auto ablk = val(a).middleCols(3 * p, 3);
      const auto gblk = g.middleCols(3 * p, 3);
      if (bcast) {
        ga.middleCols(3 * p, 3) = gblk * val(s)(0, p);
        gs(0, p) = (ablk.array() * gblk.array()).sum();
      } else {
        ga.middleCols(3 * p, 3) = gblk.array().colwise() * val(s).col(p).array();
        gs.col(p) = (ablk.array() * gblk.array()).rowwise().sum();
      }
    }
    acc(a, ga);
    acc(s, gs);
  };
  return out;
}

Var Graph::cross3(Var a, Var b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(), "cross3",
          "shape mismatch");
  require(val(a).cols() % 3 == 0, "cross3", "columns not a multiple of 3");
  const Eigen::Index k = val(a).cols() / 3;
  bool ng = wants(a) || wants(b);
  auto cross_cols = [](const Mat& x, const Mat& y, Eigen::Index p, Mat& dst) {
    const auto x0 = x.col(3 * p + 0).array(), x1 = x.col(3 * p + 1).array(),
               x2 = x.col(3 * p + 2).array();
    const auto y0 = y.col(3 * p + 0).array(), y1 = y.col(3 * p + 1).array(),
               y2 = y.col(3 * p + 2).array();
    dst.col(3 * p + 0) = x1 * y2 - x2 * y1;
    dst.col(3 * p + 1) = x2 * y0 - x0 * y2;
    dst.col(3 * p + 2) = x0 * y1 - x1 * y0;
  };
  Mat v(val(a).rows(), val(a).cols());
  for (Eigen::Index p = 0; p < k; ++p) cross_cols(val(a), val(b), p, v);
  Var out = push("cross3", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, b, k, cross_cols, out] {
    const Mat& g = nodes_[out.id].grad;
    Mat ga(val(a).rows(), val(a).cols());
    Mat gb(val(b).rows(), val(b).cols());
    for (Eigen::Index p = 0; p < k; ++p) {
      cross_cols(val(b), g, p, ga);  // d(a x b)/da^T g = b x g
      cross_cols(g, val(a), p, gb);  // d(a x b)/db^T g = g x a
    }
    acc(a, ga);
    acc(b, gb);
  };
  return out;
}

Var Graph::group_mean3(Var a, int group) {
  require(group >= 1, "group_mean3", "group must be positive");
  require(val(a).cols() % (3 * group) == 0, "group_mean3", "columns not divisible by group");
  const Eigen::Index k = val(a).cols() / (3 * group);
  bool ng = wants(a);
  Mat v = Mat::Zero(val(a).rows(), 3 * k);
  for (Eigen::Index p = 0; p < k; ++p) {
    for (int e = 0; e < group; ++e) v.middleCols(3 * p, 3) += val(a).middleCols(3 * (p * group + e), 3);
    v.middleCols(3 * p, 3) /= static_cast<double>(group);
  }
  Var out = push("group_mean3", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, k, group, out] {
    const Mat& g = nodes_[out.id].grad;
    Mat ga(val(a).rows(), val(a).cols());
    for (Eigen::Index p = 0; p < k; ++p)
      for (int e = 0; e < group; ++e)
        ga.middleCols(3 * (p * group + e), 3) = g.middleCols(3 * p, 3) / static_cast<double>(group);
    acc(a, ga);
  };
  return out;
}

Var Graph::group_max3(Var a, Var score, int group) {
  require(group >= 1, "group_max3", "group must be positive");
  require(val(a).cols() % (3 * group) == 0, "group_max3", "columns not divisible by group");
  const Eigen::Index k = val(a).cols() / (3 * group);
  require(val(score).rows() == val(a).rows() && val(score).cols() == k * group, "group_max3",
          "score shape mismatch");
  bool ng = wants(a);  // selection is piecewise constant in the score
  const Eigen::Index d = val(a).rows();
  Eigen::MatrixXi arg(d, k);
  Mat v(d, 3 * k);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index p = 0; p < k; ++p) {
      int best = 0;
      double bs = val(score)(c, p * group);
      for (int e = 1; e < group; ++e) {
        const double s = val(score)(c, p * group + e);
        if (s > bs) {
          bs = s;
          best = e;
        }
      }
      arg(c, p) = best;
      for (int r = 0; r < 3; ++r) v(c, 3 * p + r) = val(a)(c, 3 * (p * group + best) + r);
    }
  }
  Var out = push("group_max3", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, k, group, out, arg = std::move(arg)] {
    const Mat& g = nodes_[out.id].grad;
    Mat ga = Mat::Zero(val(a).rows(), val(a).cols());
    for (Eigen::Index c = 0; c < val(a).rows(); ++c)
      for (Eigen::Index p = 0; p < k; ++p)
        for (int r = 0; r < 3; ++r)
          ga(c, 3 * (p * group + arg(c, p)) + r) += g(c, 3 * p + r);
    acc(a, ga);
  };
  return out;
}

Var Graph::frame_project(Var feat, Var frame) {
  require(val(feat).cols() % 3 == 0, "frame_project", "columns not a multiple of 3");
  require(val(frame).rows() == 3 && val(frame).cols() == val(feat).cols(), "frame_project",
          "frame shape mismatch");
  const Eigen::Index d = val(feat).rows();
  const Eigen::Index k = val(feat).cols() / 3;
  bool ng = wants(feat) || wants(frame);
  Mat v(k, 3 * d);
  for (Eigen::Index p = 0; p < k; ++p) {
    // row-major flatten of (feat block) * (frame block)^T, i.e. out(p, 3c+r)
    const Mat prod = val(feat).middleCols(3 * p, 3) * val(frame).middleCols(3 * p, 3).transpose();
    for (Eigen::Index c = 0; c < d; ++c)
      for (int r = 0; r < 3; ++r) v(p, 3 * c + r) = prod(c, r);
  }
  Var out = push("frame_project", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, feat, frame, d, k, out] {
    const Mat& g = nodes_[out.id].grad;
    Mat gf = Mat::Zero(d, 3 * k);
    Mat gr = Mat::Zero(3, 3 * k);
    for (Eigen::Index p = 0; p < k; ++p) {
      Mat gp(d, 3);
      for (Eigen::Index c = 0; c < d; ++c)
        for (int r = 0; r < 3; ++r) gp(c, r) = g(p, 3 * c + r);
      gf.middleCols(3 * p, 3) = gp * val(frame).middleCols(3 * p, 3);
      gr.middleCols(3 * p, 3) = gp.transpose() * val(feat).middleCols(3 * p, 3);
    }
    acc(feat, gf);
    acc(frame, gr);
  };
  return out;
}

Var Graph::rot3(Var a, const Mat3& r) {
  require(val(a).cols() % 3 == 0, "rot3", "columns not a multiple of 3");
  const Eigen::Index k = val(a).cols() / 3;
  bool ng = wants(a);
  Mat v(val(a).rows(), val(a).cols());
  for (Eigen::Index p = 0; p < k; ++p) v.middleCols(3 * p, 3) = val(a).middleCols(3 * p, 3) * r;
  Var out = push("rot3", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, a, r, k, out] {
    const Mat& g = nodes_[out.id].grad;
    Mat ga(val(a).rows(), val(a).cols());
    for (Eigen::Index p = 0; p < k; ++p)
      ga.middleCols(3 * p, 3) = g.middleCols(3 * p, 3) * r.transpose();
    acc(a, ga);
  };
  return out;
}

Var Graph::lse_rows(Var c, Var v) {
  require(val(v).rows() == 1 && val(v).cols() == val(c).cols(), "lse_rows", "offset mismatch");
  bool ng = wants(c) || wants(v);
  Mat a = val(c);
  a.rowwise() += val(v).row(0);
  const Vec mx = a.rowwise().maxCoeff();
  Mat outv = ((a.colwise() - mx).array().exp().rowwise().sum().log() + mx.array()).matrix();
  Var out = push("lse_rows", std::move(outv), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, c, v, out] {
    Mat soft = val(c);
    soft.rowwise() += val(v).row(0);
    soft.colwise() -= nodes_[out.id].val.col(0);
    soft = soft.array().exp().matrix();
    Mat gc = soft.array().colwise() * nodes_[out.id].grad.col(0).array();
    acc(v, gc.colwise().sum());
    acc(c, std::move(gc));
  };
  return out;
}

Var Graph::lse_cols(Var c, Var u) {
  require(val(u).cols() == 1 && val(u).rows() == val(c).rows(), "lse_cols", "offset mismatch");
  bool ng = wants(c) || wants(u);
  Mat a = val(c);
  a.colwise() += val(u).col(0);
  const Eigen::RowVectorXd mx = a.colwise().maxCoeff();
  Mat outv = ((a.rowwise() - mx).array().exp().colwise().sum().log() + mx.array()).matrix();
  Var out = push("lse_cols", std::move(outv), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, c, u, out] {
    Mat soft = val(c);
    soft.colwise() += val(u).col(0);
    soft.rowwise() -= nodes_[out.id].val.row(0);
    soft = soft.array().exp().matrix();
    Mat gc = soft.array().rowwise() * nodes_[out.id].grad.row(0).array();
    acc(u, gc.rowwise().sum());
    acc(c, std::move(gc));
  };
  return out;
}

Var Graph::pad_dustbin(Var c, Var bin) {
  require(val(bin).size() == 1, "pad_dustbin", "dustbin must be a scalar");
  bool ng = wants(c) || wants(bin);
  const Eigen::Index n = val(c).rows(), m = val(c).cols();
  Mat v = Mat::Constant(n + 1, m + 1, val(bin)(0, 0));
  v.topLeftCorner(n, m) = val(c);
  Var out = push("pad_dustbin", std::move(v), ng, nullptr);
  if (ng) nodes_[out.id].back = [this, c, bin, n, m, out] {
    const Mat& g = nodes_[out.id].grad;
    acc(c, g.topLeftCorner(n, m));
    acc(bin, Mat::Constant(1, 1, g.row(n).sum() + g.col(m).head(n).sum()));
  };
  return out;
}

}  // namespace cm::ad
