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

#include "gensr/autodiff.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace gensr {

// -- ParamStore -------------------------------------------------------------

Mat& ParamStore::create(const std::string& name, int rows, int cols) {
  if (index_.count(name)) throw ConfigError("duplicate param: " + name);
  index_[name] = vals_.size();
  names_.push_back(name);
  vals_.emplace_back(Mat::Zero(rows, cols));
  grads_.emplace_back(Mat::Zero(rows, cols));
  return vals_.back();
}

Mat& ParamStore::val(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown param: " + name);
  return vals_[it->second];
}

const Mat& ParamStore::val(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown param: " + name);
  return vals_[it->second];
}

Mat& ParamStore::grad(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown param: " + name);
  return grads_[it->second];
}

void ParamStore::zero_grads() {
  for (auto& g : grads_) g.setZero();
}

void ParamStore::sgd_step(double lr) {
  if (lr == 0.0) return;
  for (size_t i = 0; i < vals_.size(); ++i) vals_[i] -= lr * grads_[i];
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& v : vals_) n += static_cast<size_t>(v.size());
  return n;
}

size_t ParamStore::scalar_count_prefix(const std::string& prefix) const {
  size_t n = 0;
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].rfind(prefix, 0) == 0) n += static_cast<size_t>(vals_[i].size());
  }
  return n;
}

double* ParamStore::coord(size_t flat_index) {
  for (size_t i = 0; i < vals_.size(); ++i) {
    size_t n = static_cast<size_t>(vals_[i].size());
    if (flat_index < n) {
      // row-major coordinate within the (column-major) Eigen matrix
      Eigen::Index r = static_cast<Eigen::Index>(flat_index) / vals_[i].cols();
      Eigen::Index c = static_cast<Eigen::Index>(flat_index) % vals_[i].cols();
      return &vals_[i](r, c);
    }
    flat_index -= n;
  }
  throw ConfigError("flat index out of range");
}

double ParamStore::grad_coord(size_t flat_index) const {
  for (size_t i = 0; i < grads_.size(); ++i) {
    size_t n = static_cast<size_t>(grads_[i].size());
    if (flat_index < n) {
      Eigen::Index r = static_cast<Eigen::Index>(flat_index) / grads_[i].cols();
      Eigen::Index c = static_cast<Eigen::Index>(flat_index) % grads_[i].cols();
      return grads_[i](r, c);
    }
    flat_index -= n;
  }
  throw ConfigError("flat index out of range");
}

Eigen::VectorXd ParamStore::flat_grad_prefix(const std::string& prefix) const {
  Eigen::VectorXd out(scalar_count_prefix(prefix));
  Eigen::Index at = 0;
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].rfind(prefix, 0) != 0) continue;
    const Mat& g = grads_[i];
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      for (Eigen::Index c = 0; c < g.cols(); ++c) out(at++) = g(r, c);
  }
  return out;
}

void ParamStore::save(std::ostream& out) const {
  uint64_t n = names_.size();
  out.write(reinterpret_cast<const char*>(&n), 8);
  for (size_t i = 0; i < names_.size(); ++i) {
    uint64_t len = names_[i].size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(names_[i].data(), static_cast<std::streamsize>(len));
    int64_t rows = vals_[i].rows(), cols = vals_[i].cols();
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        double v = vals_[i](r, c);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
  }
}

void ParamStore::load(std::istream& in) {
  names_.clear();
  index_.clear();
  vals_.clear();
  grads_.clear();
  uint64_t n;
  in.read(reinterpret_cast<char*>(&n), 8);
  for (uint64_t i = 0; i < n; ++i) {
    uint64_t len;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    int64_t rows, cols;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    Mat& m = create(name, static_cast<int>(rows), static_cast<int>(cols));
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        m(r, c) = v;
      }
  }
  if (!in) throw ConfigError("truncated parameter block");
}

// -- Tape -------------------------------------------------------------------

namespace ad {

Var Tape::push(Mat val, std::function<void(Tape&, Node&)> back) {
  nodes_.push_back(Node{std::move(val), Mat(), std::move(back)});
  return static_cast<Var>(nodes_.size()) - 1;
}

Mat& Tape::grad_of(Var v) {
  Node& n = nodes_[static_cast<size_t>(v)];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
  return n.grad;
}

Var Tape::constant(Mat v) { return push(std::move(v), nullptr); }

Var Tape::param(ParamStore& store, const std::string& name) {
  Mat* gptr = &store.grad(name);
  return push(store.val(name), [gptr](Tape&, Node& n) { *gptr += n.grad; });
}

Var Tape::add(Var a, Var b) {
  return push(val(a) + val(b), [a, b](Tape& t, Node& n) {
    t.grad_of(a) += n.grad;
    t.grad_of(b) += n.grad;
  });
}

Var Tape::sub(Var a, Var b) {
  return push(val(a) - val(b), [a, b](Tape& t, Node& n) {
    t.grad_of(a) += n.grad;
    t.grad_of(b) -= n.grad;
  });
}

Var Tape::scale(Var a, double c) {
  return push(val(a) * c, [a, c](Tape& t, Node& n) { t.grad_of(a) += c * n.grad; });
}

Var Tape::cmul(Var a, Var b) {
  return push(val(a).cwiseProduct(val(b)), [a, b](Tape& t, Node& n) {
    t.grad_of(a) += n.grad.cwiseProduct(t.val(b));
    t.grad_of(b) += n.grad.cwiseProduct(t.val(a));
  });
}

Var Tape::tanh_(Var a) {
  Mat y = val(a).array().tanh().matrix();
  Var out = push(y, nullptr);
  nodes_.back().back = [a, out](Tape& t, Node& n) {
    const Mat& yv = t.val(out);
    t.grad_of(a) += n.grad.cwiseProduct((1.0 - yv.array().square()).matrix());
  };
  return out;
}

Var Tape::exp_(Var a) {
  Mat y = val(a).array().exp().matrix();
  Var out = push(y, nullptr);
  nodes_.back().back = [a, out](Tape& t, Node& n) {
    t.grad_of(a) += n.grad.cwiseProduct(t.val(out));
  };
  return out;
}

Var Tape::log_(Var a) {
  return push(val(a).array().log().matrix(), [a](Tape& t, Node& n) {
    t.grad_of(a) += n.grad.cwiseQuotient(t.val(a));
  });
}

Var Tape::matmul(Var a, Var b) {
  return push(val(a) * val(b), [a, b](Tape& t, Node& n) {
    t.grad_of(a) += n.grad * t.val(b).transpose();
    t.grad_of(b) += t.val(a).transpose() * n.grad;
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  return push(val(a) * val(b).transpose(), [a, b](Tape& t, Node& n) {
    t.grad_of(a) += n.grad * t.val(b);
    t.grad_of(b) += n.grad.transpose() * t.val(a);
  });
}

Var Tape::add_row_broadcast(Var a, Var row) {
  Mat y = val(a);
  y.rowwise() += val(row).row(0);
  return push(std::move(y), [a, row](Tape& t, Node& n) {
    t.grad_of(a) += n.grad;
    t.grad_of(row) += n.grad.colwise().sum();
  });
}

Var Tape::transpose(Var a) {
  return push(val(a).transpose(), [a](Tape& t, Node& n) {
    t.grad_of(a) += n.grad.transpose();
  });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  Eigen::Index rows = 0, cols = val(parts.at(0)).cols();
  for (Var p : parts) rows += val(p).rows();
  Mat y(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    y.middleRows(at, val(p).rows()) = val(p);
    at += val(p).rows();
  }
  return push(std::move(y), [parts](Tape& t, Node& n) {
    Eigen::Index at = 0;
    for (Var p : parts) {
      Eigen::Index r = t.val(p).rows();
      t.grad_of(p) += n.grad.middleRows(at, r);
      at += r;
    }
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  Eigen::Index cols = 0, rows = val(parts.at(0)).rows();
  for (Var p : parts) cols += val(p).cols();
  Mat y(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    y.middleCols(at, val(p).cols()) = val(p);
    at += val(p).cols();
  }
  return push(std::move(y), [parts](Tape& t, Node& n) {
    Eigen::Index at = 0;
    for (Var p : parts) {
      Eigen::Index c = t.val(p).cols();
      t.grad_of(p) += n.grad.middleCols(at, c);
      at += c;
    }
  });
}

Var Tape::slice_rows(Var a, int start, int count) {
  return push(val(a).middleRows(start, count), [a, start, count](Tape& t, Node& n) {
    t.grad_of(a).middleRows(start, count) += n.grad;
  });
}

Var Tape::slice_cols(Var a, int start, int count) {
  return push(val(a).middleCols(start, count), [a, start, count](Tape& t, Node& n) {
    t.grad_of(a).middleCols(start, count) += n.grad;
  });
}

Var Tape::mean_rows(Var a) {
  double inv = 1.0 / static_cast<double>(val(a).rows());
  Mat y = val(a).colwise().sum() * inv;
  return push(std::move(y), [a, inv](Tape& t, Node& n) {
    t.grad_of(a) += (n.grad * inv).replicate(t.val(a).rows(), 1);
  });
}

Var Tape::sum_all(Var a) {
  Mat y(1, 1);
  y(0, 0) = val(a).sum();
  return push(std::move(y), [a](Tape& t, Node& n) {
    t.grad_of(a).array() += n.grad(0, 0);
  });
}

Var Tape::sum_rows(Var a) {
  Mat y = val(a).rowwise().sum();
  return push(std::move(y), [a](Tape& t, Node& n) {
    t.grad_of(a) += n.grad.replicate(1, t.val(a).cols());
  });
}

Var Tape::take_diag(Var a) {
  if (val(a).rows() != val(a).cols()) throw ConfigError("take_diag: not square");
  Mat y = val(a).diagonal();
  return push(std::move(y), [a](Tape& t, Node& n) {
    t.grad_of(a).diagonal() += n.grad.col(0);
  });
}

Var Tape::softmax_rows(Var a) { return softmax_rows_masked(a, Mat()); }

Var Tape::softmax_rows_masked(Var a, Mat add_mask) {
  Mat z = val(a);
  if (add_mask.size() > 0) z += add_mask;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    double mx = z.row(r).maxCoeff();
    z.row(r) = (z.row(r).array() - mx).exp();
    z.row(r) /= z.row(r).sum();
  }
  Var out = push(z, nullptr);
  nodes_.back().back = [a, out](Tape& t, Node& n) {
    const Mat& y = t.val(out);
    Mat da(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      double dot = n.grad.row(r).dot(y.row(r));
      da.row(r) = y.row(r).cwiseProduct(n.grad.row(r).array().matrix() -
                                        Eigen::RowVectorXd::Constant(y.cols(), dot));
    }
    t.grad_of(a) += da;
  };
  return out;
}

Var Tape::layernorm_rows(Var a, Var gain, Var bias) {
  const Mat& x = val(a);
  const Eigen::Index d = x.cols();
  constexpr double kEps = 1e-6;
  Mat xhat(x.rows(), d);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double mu = x.row(r).mean();
    double var = (x.row(r).array() - mu).square().mean();
    double is = 1.0 / std::sqrt(var + kEps);
    inv_std(r) = is;
    xhat.row(r) = (x.row(r).array() - mu).matrix() * is;
  }
  Mat y = xhat;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    y.row(r) = y.row(r).cwiseProduct(val(gain).row(0)) + val(bias).row(0);
  }
  return push(std::move(y), [a, gain, bias, xhat, inv_std](Tape& t, Node& n) {
    const Eigen::Index d = xhat.cols();
    const Mat& g = t.val(gain);
    Mat dxhat(n.grad.rows(), d);
    for (Eigen::Index r = 0; r < n.grad.rows(); ++r) {
      dxhat.row(r) = n.grad.row(r).cwiseProduct(g.row(0));
      t.grad_of(gain).row(0) += n.grad.row(r).cwiseProduct(xhat.row(r));
      t.grad_of(bias).row(0) += n.grad.row(r);
    }
    Mat& da = t.grad_of(a);
    double invd = 1.0 / static_cast<double>(d);
    for (Eigen::Index r = 0; r < n.grad.rows(); ++r) {
      double m1 = dxhat.row(r).mean();
      double m2 = dxhat.row(r).dot(xhat.row(r)) * invd;
      da.row(r) += inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2).matrix();
    }
  });
}

Var Tape::gather_rows(Var table, std::vector<int> indices) {
  Mat y(static_cast<Eigen::Index>(indices.size()), val(table).cols());
  for (size_t i = 0; i < indices.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = val(table).row(indices[i]);
  return push(std::move(y), [table, indices = std::move(indices)](Tape& t, Node& n) {
    Mat& g = t.grad_of(table);
    for (size_t i = 0; i < indices.size(); ++i) {
      g.row(indices[i]) += n.grad.row(static_cast<Eigen::Index>(i));
    }
  });
}

Var Tape::nll_rows(Var logits, std::vector<int> targets) {
  const Mat& z = val(logits);
  if (static_cast<Eigen::Index>(targets.size()) != z.rows()) {
    throw ConfigError("nll_rows: one target per row required");
  }
  Mat soft(z.rows(), z.cols());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    double mx = z.row(r).maxCoeff();
    Eigen::RowVectorXd e = (z.row(r).array() - mx).exp();
    double sum = e.sum();
    soft.row(r) = e / sum;
    loss -= z(r, targets[static_cast<size_t>(r)]) - mx - std::log(sum);
  }
  Mat y(1, 1);
  y(0, 0) = loss;
  return push(std::move(y), [logits, targets = std::move(targets), soft](Tape& t, Node& n) {
    Mat d = soft * n.grad(0, 0);
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
      d(r, targets[static_cast<size_t>(r)]) -= n.grad(0, 0);
    }
    t.grad_of(logits) += d;
  });
}

Var Tape::cosine_matrix(Var a, Var b) {
  const Mat& A = val(a);
  const Mat& B = val(b);
  if (A.cols() != B.cols()) throw ConfigError("cosine_matrix: width mismatch");
  Eigen::VectorXd na = A.rowwise().norm(), nb = B.rowwise().norm();
  for (Eigen::Index i = 0; i < na.size(); ++i) {
    if (na(i) == 0.0) throw NumericalError("cosine: zero-norm vector");
  }
  for (Eigen::Index j = 0; j < nb.size(); ++j) {
    if (nb(j) == 0.0) throw NumericalError("cosine: zero-norm vector");
  }
  Mat C = (A * B.transpose()).array().colwise() / na.array();
  C = C.array().rowwise() / nb.transpose().array();
  return push(C, [a, b, na, nb](Tape& t, Node& n) {
    const Mat& A = t.val(a);
    const Mat& B = t.val(b);
    const Mat C = (A * B.transpose()).cwiseQuotient(na * nb.transpose());
    Mat dA = Mat::Zero(A.rows(), A.cols());
    Mat dB = Mat::Zero(B.rows(), B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      for (Eigen::Index j = 0; j < B.rows(); ++j) {
        double g = n.grad(i, j);
        if (g == 0.0) continue;
        double inv = 1.0 / (na(i) * nb(j));
        dA.row(i) += g * (B.row(j) * inv - C(i, j) / (na(i) * na(i)) * A.row(i));
        dB.row(j) += g * (A.row(i) * inv - C(i, j) / (nb(j) * nb(j)) * B.row(j));
      }
    }
    t.grad_of(a) += dA;
    t.grad_of(b) += dB;
  });
}

Var Tape::bce_logit(Var logit, double label) {
  double z = val(logit)(0, 0);
  // -label*log(sigma) - (1-label)*log(1-sigma), stable
  double loss = std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
  Mat y(1, 1);
  y(0, 0) = loss;
  return push(std::move(y), [logit, label](Tape& t, Node& n) {
    double z = t.val(logit)(0, 0);
    double p = 1.0 / (1.0 + std::exp(-z));
    t.grad_of(logit)(0, 0) += n.grad(0, 0) * (p - label);
  });
}

void Tape::backward(Var loss) {
  Node& ln = nodes_[static_cast<size_t>(loss)];
  if (ln.val.size() != 1) throw ConfigError("backward: loss must be 1x1");
  // drop node-level adjoints from any earlier backward pass so repeated
  // backward calls on one tape stay independent (store grads still accumulate)
  for (Node& n : nodes_) n.grad.resize(0, 0);
  grad_of(loss)(0, 0) = 1.0;
  for (Var v = loss; v >= 0; --v) {
    Node& n = nodes_[static_cast<size_t>(v)];
    if (n.grad.size() == 0 || !n.back) continue;
    n.back(*this, n);
  }
}

}  // namespace ad

double finite_difference_audit(const std::function<double()>& loss_fn,
                               const std::function<void()>& grad_fn,
                               ParamStore& store, int n_coords, uint64_t seed,
                               double step) {
  store.zero_grads();
  grad_fn();
  size_t total = store.scalar_count();
  Rng rng(seed);
  // snapshot coordinates and their analytic gradients before probing, since
  // loss_fn may itself accumulate gradients
  std::vector<size_t> coords(static_cast<size_t>(n_coords));
  std::vector<double> analytic(static_cast<size_t>(n_coords));
  for (int k = 0; k < n_coords; ++k) {
    coords[static_cast<size_t>(k)] = static_cast<size_t>(rng.next_below(total));
    analytic[static_cast<size_t>(k)] = store.grad_coord(coords[static_cast<size_t>(k)]);
  }
  double max_rel = 0.0;
  for (int k = 0; k < n_coords; ++k) {
    size_t idx = coords[static_cast<size_t>(k)];
    double* p = store.coord(idx);
    double orig = *p;
    double h = step * std::max(1.0, std::abs(orig));
    *p = orig + h;
    double lp = loss_fn();
    *p = orig - h;
    double lm = loss_fn();
    *p = orig;
    double fd = (lp - lm) / (2.0 * h);
    double an = analytic[static_cast<size_t>(k)];
    // below central-difference resolution both estimates are numerically zero
    if (std::abs(fd) < 1e-10 && std::abs(an) < 1e-10) continue;
    double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
    max_rel = std::max(max_rel, std::abs(fd - an) / denom);
  }
  return max_rel;
}

}  // namespace gensr
