// Copyright 2026 The GenSR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gensr/common.hpp"

namespace gensr {

using Mat = Eigen::MatrixXd;

// Named dense parameters with matching gradient buffers.
class ParamStore {
 public:
  Mat& create(const std::string& name, int rows, int cols);
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  Mat& val(const std::string& name);
  const Mat& val(const std::string& name) const;
  Mat& grad(const std::string& name);

  const std::vector<std::string>& names() const { return names_; }
  void zero_grads();
  void sgd_step(double lr);
  size_t scalar_count() const;
  size_t scalar_count_prefix(const std::string& prefix) const;

  // Flat coordinate access (row-major within each param, params in creation
  // order); used by finite-difference audits.
  double* coord(size_t flat_index);
  double grad_coord(size_t flat_index) const;

  // Gradients of all params whose name starts with `prefix`, flattened in
  // creation order.
  Eigen::VectorXd flat_grad_prefix(const std::string& prefix) const;

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<Mat> vals_;
  std::vector<Mat> grads_;
};

namespace ad {

using Var = int;

class Tape {
 public:
  // leaves
  Var constant(Mat v);
  Var param(ParamStore& store, const std::string& name);

  // elementwise / arithmetic
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double c);
  Var cmul(Var a, Var b);
  Var tanh_(Var a);
  Var exp_(Var a);
  Var log_(Var a);

  // linear algebra
  Var matmul(Var a, Var b);     // a * b
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add_row_broadcast(Var a, Var row);  // a(N x d) + row(1 x d) per row
  Var transpose(Var a);

  // shape ops
  Var concat_rows(const std::vector<Var>& parts);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_rows(Var a, int start, int count);
  Var slice_cols(Var a, int start, int count);
  Var mean_rows(Var a);  // 1 x d
  Var sum_all(Var a);    // 1 x 1
  Var sum_rows(Var a);   // N x 1
  Var take_diag(Var a);  // N x 1 from square a

  // nn ops
  Var softmax_rows(Var a);                       // row-wise softmax
  Var softmax_rows_masked(Var a, Mat add_mask);  // additive mask before softmax
  Var layernorm_rows(Var a, Var gain, Var bias);  // gain/bias 1 x d
  Var gather_rows(Var table, std::vector<int> indices);
  // Sum over rows of -log softmax(logits_row)[target]; 1 x 1.
  Var nll_rows(Var logits, std::vector<int> targets);
  // Pairwise cosine matrix: out(i, j) = cos(a_i, b_j); throws on zero rows.
  Var cosine_matrix(Var a, Var b);
  // Binary cross-entropy with logits; logit and out are 1 x 1.
  Var bce_logit(Var logit, double label);

  const Mat& val(Var v) const { return nodes_[static_cast<size_t>(v)].val; }
  // Backward from a 1x1 loss node. Accumulates into ParamStore grads.
  void backward(Var loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat val;
    Mat grad;  // empty until touched in backward
    std::function<void(Tape&, Node&)> back;
  };

  Var push(Mat val, std::function<void(Tape&, Node&)> back);
  Mat& grad_of(Var v);
  bool has_grad(Var v) const { return nodes_[static_cast<size_t>(v)].grad.size() > 0; }

  std::vector<Node> nodes_;
};

}  // namespace ad

// Central finite differences of `loss_fn` against the analytic gradient in
// `store` at `n_coords` random coordinates; returns the max relative error.
// `grad_fn` must populate store gradients (zeroed internally first).
double finite_difference_audit(const std::function<double()>& loss_fn,
                               const std::function<void()>& grad_fn,
                               ParamStore& store, int n_coords, uint64_t seed,
                               double step = 1e-5);

}  // namespace gensr
