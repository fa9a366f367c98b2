#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cm/ad/param_store.hpp"
#include "cm/geom/types.hpp"

namespace cm::ad {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Eager tape. Values are computed at construction, backward replays the tape
// in reverse and accumulates into bound parameters. Every op validates shapes
// and (by default) finiteness of its output, reporting the op name on failure.
//
// Vector-neuron features use the (channels x 3*points) layout: point k owns
// columns [3k, 3k+3). The *3 ops below operate on those column triplets.
class Graph {
 public:
  explicit Graph(bool check_finite = true) : check_finite_(check_finite) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Mat v);
  Var scalar(double v) { return constant(Mat::Constant(1, 1, v)); }
  Var param(ParamStore& store, const std::string& name);

  // elementwise, matching shapes
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);

  // broadcasts: r is 1 x m, c is n x 1
  Var add_rowvec(Var a, Var r);
  Var sub_rowvec(Var a, Var r);
  Var mul_rowvec(Var a, Var r);
  Var div_rowvec(Var a, Var r);
  Var add_colvec(Var a, Var c);
  Var mul_colvec(Var a, Var c);
  Var div_colvec(Var a, Var c);

  Var scale(Var a, double s);
  Var add_scalar(Var a, double c);
  Var neg(Var a) { return scale(a, -1.0); }

  Var exp_(Var a);
  Var log_(Var a);
  Var sqrt_(Var a);
  Var tanh_(Var a);
  Var sigmoid(Var a);
  Var leaky_relu(Var a, double slope);
  Var relu(Var a) { return leaky_relu(a, 0.0); }
  Var clamp_min(Var a, double lo);

  Var matmul(Var a, Var b);     // a * b
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var transpose(Var a);

  Var sum_all(Var a);   // 1 x 1
  Var mean_all(Var a);  // 1 x 1
  Var rowwise_sum(Var a);   // n x 1
  Var colwise_sum(Var a);   // 1 x m
  Var colwise_mean(Var a);  // 1 x m
  Var colwise_max(Var a);   // 1 x m, subgradient to first argmax

  Var concat_rows(Var a, Var b);
  Var concat_cols(Var a, Var b);
  Var slice_rows(Var a, int r0, int len);
  Var slice_cols(Var a, int c0, int len);
  Var gather_rows(Var a, std::vector<int> idx);
  Var gather_cells(Var a, std::vector<std::pair<int, int>> cells);  // k x 1

  // vector-neuron column-triplet ops
  Var gather_points(Var a, std::vector<int> idx);          // (D x 3K) -> (D x 3|idx|)
  Var dot3(Var a, Var b);                                  // (D x 3K)^2 -> (D x K)
  Var scale3(Var a, Var s);                                // s is (D x K) or (1 x K)
  Var cross3(Var a, Var b);                                // per-triplet cross product
  Var group_mean3(Var a, int group);                       // (D x 3Kg) -> (D x 3K)
  Var group_max3(Var a, Var score, int group);             // score (D x Kg), -> (D x 3K)
  Var frame_project(Var feat, Var frame);                  // (D x 3K),(3 x 3K) -> (K x 3D)
  Var rot3(Var a, const Mat3& r);                          // per-triplet right product with r

  // row/column log-sum-exp with an additive offset vector, numerically stable:
  // lse_rows(C, v)_i = log sum_j exp(C_ij + v_j), v is 1 x m -> n x 1
  // lse_cols(C, u)_j = log sum_i exp(C_ij + u_i), u is n x 1 -> 1 x m
  Var lse_rows(Var c, Var v);
  Var lse_cols(Var c, Var u);

  // (n x m) cost plus a learned dustbin scalar -> (n+1 x m+1) augmented cost
  Var pad_dustbin(Var c, Var bin);

  const Mat& value(Var v) const;
  double scalar_value(Var v) const;
  void backward(Var loss);
  Mat grad_of(Var v) const;  // zero matrix when the node received no gradient
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Mat val;
    Mat grad;
    std::function<void()> back;
    const char* op = "";
    Param* bound = nullptr;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> param_vars_;
  bool check_finite_ = true;

  Var push(const char* op, Mat val, bool needs_grad, std::function<void()> back);
  bool wants(Var v) const { return nodes_[v.id].needs_grad; }
  const Mat& val(Var v) const { return nodes_[v.id].val; }
  Mat& gref(Var v);          // allocate-on-demand gradient of v
  void acc(Var v, const Mat& g);  // accumulate if v needs grad
  void check(Var v, const char* op) const;
};

}  // namespace cm::ad
