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

#include "gensr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace gensr {

using ad::Tape;
using ad::Var;

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void write_header(std::ofstream& out,
                  const std::map<std::string, std::string>& header) {
  for (const auto& [k, v] : header) out << "# " << k << "=" << v << "\n";
}
}  // namespace

// -- MINE --------------------------------------------------------------------

void create_mine_critic(ParamStore& store, int dx, int dy, int hidden, Rng& rng) {
  const int din = dx + dy;
  nn::init_normal(store, "critic.w1", din, hidden,
                  1.0 / std::sqrt(static_cast<double>(din)), rng);
  store.create("critic.b1", 1, hidden).setZero();
  nn::init_normal(store, "critic.w2", hidden, hidden,
                  1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  store.create("critic.b2", 1, hidden).setZero();
  nn::init_normal(store, "critic.w3", hidden, 1,
                  1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  store.create("critic.b3", 1, 1).setZero();
}

Var mine_critic_forward(Tape& t, ParamStore& store, Var xy) {
  Var h1 = t.tanh_(t.add_row_broadcast(t.matmul(xy, t.param(store, "critic.w1")),
                                       t.param(store, "critic.b1")));
  Var h2 = t.tanh_(t.add_row_broadcast(t.matmul(h1, t.param(store, "critic.w2")),
                                       t.param(store, "critic.b2")));
  return t.add_row_broadcast(t.matmul(h2, t.param(store, "critic.w3")),
                             t.param(store, "critic.b3"));
}

namespace {

// DV bound as a tape program; marginal term is max-shifted log-mean-exp.
Var mine_bound_program(Tape& t, ParamStore& critic, const Mat& joint,
                       const Mat& marginal) {
  Var fj = mine_critic_forward(t, critic, t.constant(joint));
  Var fm = mine_critic_forward(t, critic, t.constant(marginal));
  double shift = t.val(fm).maxCoeff();
  Var ej = t.scale(t.sum_all(fj), 1.0 / static_cast<double>(joint.rows()));
  Var em = t.scale(
      t.sum_all(t.exp_(t.sub(fm, t.constant(Mat::Constant(marginal.rows(), 1, shift))))),
      1.0 / static_cast<double>(marginal.rows()));
  Var log_em = t.add(t.log_(em), t.constant(Mat::Constant(1, 1, shift)));
  return t.sub(ej, log_em);
}

Mat zscore_columns(const Mat& x) {
  Mat z = x;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    double mean = z.col(j).mean();
    z.col(j).array() -= mean;
    double sd = std::sqrt(z.col(j).squaredNorm() /
                          std::max<Eigen::Index>(1, z.rows() - 1));
    if (sd > 1e-12) z.col(j) /= sd;
  }
  return z;
}

Mat paste_cols(const Mat& a, const Mat& b) {
  Mat out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace

double mine_bound(ParamStore& critic, const Mat& joint_xy, const Mat& marginal_xy) {
  if (joint_xy.rows() == 0 || marginal_xy.rows() == 0) {
    throw ConfigError("mine_bound: empty sample set");
  }
  Tape t;
  double v = t.val(mine_bound_program(t, critic, joint_xy, marginal_xy))(0, 0);
  if (!std::isfinite(v)) throw NumericalError("mine_bound: non-finite value");
  return v;
}

MIEstimate train_mine(const Mat& x, const Mat& y, const MineConfig& config) {
  if (x.rows() != y.rows()) throw ConfigError("train_mine: row count mismatch");
  const int n = static_cast<int>(x.rows());
  if (n < 16) throw ConfigError("train_mine: too few samples");

  Mat xs = zscore_columns(x), ys = zscore_columns(y);
  Rng rng(derive_seed(config.seed, "mine", 0));

  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  for (int i = n; i > 1; --i) {
    std::swap(order[static_cast<size_t>(i - 1)],
              order[rng.next_below(static_cast<uint64_t>(i))]);
  }
  int n_hold = std::max(8, static_cast<int>(n * config.holdout_fraction));
  n_hold = std::min(n_hold, n / 2);
  std::vector<int> hold(order.begin(), order.begin() + n_hold);
  std::vector<int> train(order.begin() + n_hold, order.end());

  auto gather = [&](const Mat& m, const std::vector<int>& idx) {
    Mat out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
  };
  Mat hx = gather(xs, hold), hy = gather(ys, hold);
  Mat hold_joint = paste_cols(hx, hy);

  ParamStore critic;
  create_mine_critic(critic, static_cast<int>(x.cols()), static_cast<int>(y.cols()),
                     config.hidden, rng);
  nn::Adam opt(config.lr);

  MIEstimate est;
  est.n_samples = n;
  double ema = 0.0;
  bool ema_init = false;
  const int batch = std::min<int>(config.batch, static_cast<int>(train.size()));
  for (int step = 0; step < config.steps; ++step) {
    Mat bx(batch, xs.cols()), by(batch, ys.cols()), my(batch, ys.cols());
    for (int i = 0; i < batch; ++i) {
      int j = train[rng.next_below(train.size())];
      bx.row(i) = xs.row(j);
      by.row(i) = ys.row(j);
      my.row(i) = ys.row(train[rng.next_below(train.size())]);
    }
    Tape t;
    Var bound = mine_bound_program(t, critic, paste_cols(bx, by), paste_cols(bx, my));
    Var loss = t.scale(bound, -1.0);  // ascend the bound
    if (!std::isfinite(t.val(loss)(0, 0))) {
      throw NumericalError("train_mine: non-finite bound");
    }
    critic.zero_grads();
    t.backward(loss);
    opt.step(critic);

    if ((step + 1) % config.eval_every != 0) continue;
    // held-out evaluation with a step-derived marginal shuffle
    Rng srng(derive_seed(config.seed, "mine_eval", static_cast<uint64_t>(step)));
    Mat hmy(hy.rows(), hy.cols());
    for (Eigen::Index i = 0; i < hy.rows(); ++i) {
      hmy.row(i) = hy.row(static_cast<Eigen::Index>(
          srng.next_below(static_cast<uint64_t>(hy.rows()))));
    }
    double v = mine_bound(critic, hold_joint, paste_cols(hx, hmy));
    ema = ema_init ? config.ema * ema + (1.0 - config.ema) * v : v;
    ema_init = true;
    est.curve.push_back(ema);
  }
  if (est.curve.empty()) throw ConfigError("train_mine: no held-out evaluations");
  size_t tail = std::min<size_t>(est.curve.size(),
                                 static_cast<size_t>(std::max(1, config.tail_window)));
  double acc = 0.0;
  for (size_t i = est.curve.size() - tail; i < est.curve.size(); ++i) {
    acc += est.curve[i];
  }
  est.value = acc / static_cast<double>(tail);
  return est;
}

MIEstimate estimate_model_mi(const RepresentationFn& fwd,
                             const std::vector<EvalInstance>& instances,
                             Task task, const MineConfig& config,
                             int min_instances) {
  std::vector<const EvalInstance*> of_task;
  for (const auto& inst : instances) {
    if (inst.task == task) of_task.push_back(&inst);
  }
  if (static_cast<int>(of_task.size()) < min_instances) {
    throw ConfigError("estimate_model_mi: need >= " + std::to_string(min_instances) +
                      " instances of the task, have " +
                      std::to_string(of_task.size()));
  }
  Mat x, y(static_cast<Eigen::Index>(of_task.size()), 1);
  for (size_t i = 0; i < of_task.size(); ++i) {
    auto [rep, prob] = fwd(*of_task[i], of_task[i]->target_item);
    if (x.size() == 0) x.resize(static_cast<Eigen::Index>(of_task.size()), rep.size());
    x.row(static_cast<Eigen::Index>(i)) = rep;
    y(static_cast<Eigen::Index>(i), 0) = prob;
  }
  return train_mine(x, y, config);
}

// -- gradient conflict -------------------------------------------------------

double gradient_cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return kNan;
  return a.dot(b) / (na * nb);
}

GradientTrace trace_from_stats(const TrainStats& stats,
                               const std::string& paradigm) {
  GradientTrace trace;
  trace.paradigm = paradigm;
  for (const auto& r : stats.trace) trace.cosines.push_back(r.grad_cosine);
  return trace;
}

double mean_defined(const std::vector<double>& values) {
  double acc = 0.0;
  int n = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      acc += v;
      ++n;
    }
  }
  return n > 0 ? acc / n : kNan;
}

int count_negative(const std::vector<double>& values) {
  int n = 0;
  for (double v : values) {
    if (std::isfinite(v) && v < 0.0) ++n;
  }
  return n;
}

void write_gradient_trace_csv(const std::string& path,
                              const std::vector<GradientTrace>& traces,
                              const std::map<std::string, std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  write_header(out, header);
  out << "paradigm,step,cosine\n" << std::setprecision(17);
  for (const auto& trace : traces) {
    for (size_t i = 0; i < trace.cosines.size(); ++i) {
      out << trace.paradigm << "," << i << ",";
      if (std::isfinite(trace.cosines[i])) {
        out << trace.cosines[i];
      } else {
        out << "undefined";
      }
      out << "\n";
    }
  }
}

// -- PCA / KDE ---------------------------------------------------------------

PcaResult pca_project(const Mat& x) {
  if (x.rows() < 3) throw ConfigError("pca_project: need at least 3 points");
  Mat centered = x.rowwise() - x.colwise().mean();
  Mat cov = centered.transpose() * centered /
            static_cast<double>(x.rows() - 1);
  if (cov.cwiseAbs().maxCoeff() < 1e-300) {
    throw NumericalError("pca_project: rank-0 input");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
  PcaResult res;
  res.components.resize(x.cols(), 2);
  const Eigen::Index last = cov.rows() - 1;
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd v = eig.eigenvectors().col(last - c);
    // deterministic sign: first nonzero loading positive
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v(i) != 0.0) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    res.components.col(c) = v;
    res.explained(c) = std::max(0.0, eig.eigenvalues()(last - c));
  }
  res.points = centered * res.components;
  return res;
}

KdeGrid kde_density(const Mat& points2d, double bandwidth, int resolution) {
  if (bandwidth <= 0.0) throw ConfigError("kde_density: bandwidth must be > 0");
  if (points2d.cols() != 2 || points2d.rows() == 0) {
    throw ConfigError("kde_density: need non-empty M x 2 points");
  }
  if (resolution < 2) throw ConfigError("kde_density: resolution too small");
  KdeGrid g;
  g.resolution = resolution;
  g.bandwidth = bandwidth;
  double xmin = points2d.col(0).minCoeff() - 3.0 * bandwidth;
  double xmax = points2d.col(0).maxCoeff() + 3.0 * bandwidth;
  double ymin = points2d.col(1).minCoeff() - 3.0 * bandwidth;
  double ymax = points2d.col(1).maxCoeff() + 3.0 * bandwidth;
  g.x0 = xmin;
  g.y0 = ymin;
  g.dx = (xmax - xmin) / (resolution - 1);
  g.dy = (ymax - ymin) / (resolution - 1);
  g.density = Mat::Zero(resolution, resolution);
  const double norm = 1.0 / (2.0 * M_PI * bandwidth * bandwidth *
                             static_cast<double>(points2d.rows()));
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  for (int iy = 0; iy < resolution; ++iy) {
    double gy = g.y0 + iy * g.dy;
    for (int ix = 0; ix < resolution; ++ix) {
      double gx = g.x0 + ix * g.dx;
      double acc = 0.0;
      for (Eigen::Index p = 0; p < points2d.rows(); ++p) {
        double dx = gx - points2d(p, 0), dy = gy - points2d(p, 1);
        acc += std::exp(-(dx * dx + dy * dy) * inv2h2);
      }
      g.density(iy, ix) = norm * acc;
    }
  }
  return g;
}

void write_projection_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, PcaResult>>& per_task,
    const std::map<std::string, std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  write_header(out, header);
  out << "task,pc1,pc2,explained1,explained2\n" << std::setprecision(17);
  for (const auto& [task, pca] : per_task) {
    for (Eigen::Index i = 0; i < pca.points.rows(); ++i) {
      out << task << "," << pca.points(i, 0) << "," << pca.points(i, 1) << ","
          << pca.explained(0) << "," << pca.explained(1) << "\n";
    }
  }
}

void write_kde_csv(const std::string& path, const KdeGrid& grid,
                   const std::map<std::string, std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  write_header(out, header);
  out << "# bandwidth=" << std::setprecision(17) << grid.bandwidth
      << " x0=" << grid.x0 << " y0=" << grid.y0 << " dx=" << grid.dx
      << " dy=" << grid.dy << "\n";
  out << "x,y,density\n";
  for (int iy = 0; iy < grid.resolution; ++iy) {
    for (int ix = 0; ix < grid.resolution; ++ix) {
      out << grid.x0 + ix * grid.dx << "," << grid.y0 + iy * grid.dy << ","
          << grid.density(iy, ix) << "\n";
    }
  }
}

// -- Gaussian theorem sandbox ------------------------------------------------

double mi_from_w(double w, double sigma_x2, double sigma_eps2, bool literal) {
  if (sigma_eps2 <= 0.0) throw ConfigError("mi_from_w: sigma_eps2 must be > 0");
  if (literal) {
    double arg = w * sigma_x2 / sigma_eps2;
    if (arg <= -1.0) {
      throw NumericalError("mi_from_w: literal mode undefined for argument <= -1");
    }
    return 0.5 * std::log1p(arg);
  }
  return 0.5 * std::log1p(w * w * sigma_x2 / sigma_eps2);
}

namespace {

Eigen::VectorXd gaussian_vector(Rng& rng, int d) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.next_normal();
  return v;
}

// direction-based effective scalar: project w* onto the estimated direction
double effective_w(const Eigen::VectorXd& estimate, const Eigen::VectorXd& w_true) {
  double n = estimate.norm();
  if (n == 0.0) return 0.0;
  return w_true.dot(estimate) / n;
}

}  // namespace

SandboxReport run_separability_experiment(const GaussianSandboxConfig& config) {
  if (config.d < 1 || config.n < 4 || config.trials < 1) {
    throw ConfigError("sandbox: need d >= 1, n >= 4, trials >= 1");
  }
  if (config.sigma_x2 <= 0.0 || config.sigma_eps2 <= 0.0) {
    throw ConfigError("sandbox: variances must be positive");
  }
  SandboxReport report;
  report.trials = config.trials;
  const double sx = std::sqrt(config.sigma_x2);

  for (int trial = 0; trial < config.trials; ++trial) {
    for (int attempt = 0;; ++attempt) {
      Rng rng(derive_seed(config.seed, "sandbox_trial",
                          static_cast<uint64_t>(trial) * 1000 +
                              static_cast<uint64_t>(attempt)));
      Eigen::VectorXd w_true = gaussian_vector(rng, config.d);
      w_true *= config.w_norm / w_true.norm();

      // x | y ~ N((y - 1/2) w*, sigma_x2 I), balanced classes
      Mat x(config.n, config.d);
      Eigen::VectorXd y(config.n);
      int n1 = 0;
      for (int i = 0; i < config.n; ++i) {
        double yi = rng.next_below(2) ? 1.0 : 0.0;
        y(i) = yi;
        n1 += yi > 0.5 ? 1 : 0;
        x.row(i) = ((yi - 0.5) * w_true + sx * gaussian_vector(rng, config.d))
                       .transpose();
      }
      if (n1 == 0 || n1 == config.n) {
        report.resampled += 1;
        continue;  // empty class: generative fit undefined, resample
      }

      // generative: class-mean MLE, discriminant = mean difference / sigma_x2
      Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(config.d);
      Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(config.d);
      for (int i = 0; i < config.n; ++i) {
        (y(i) > 0.5 ? mu1 : mu0) += x.row(i).transpose();
      }
      mu1 /= n1;
      mu0 /= (config.n - n1);
      Eigen::VectorXd w_gen = (mu1 - mu0) / config.sigma_x2;

      // discriminative: logistic regression, full-batch gradient descent
      Eigen::VectorXd w_disc = Eigen::VectorXd::Zero(config.d);
      double b_disc = 0.0;
      for (int it = 0; it < config.logistic_iters; ++it) {
        Eigen::VectorXd z = x * w_disc;
        z.array() += b_disc;
        Eigen::VectorXd p = (1.0 + (-z.array()).exp()).inverse();
        Eigen::VectorXd resid = y - p;
        w_disc += config.logistic_lr / config.n * (x.transpose() * resid);
        b_disc += config.logistic_lr / config.n * resid.sum();
      }

      report.mean_gen_err += (w_gen - w_true).norm();
      report.mean_disc_err += (w_disc - w_true).norm();
      double mi_g = mi_from_w(effective_w(w_gen, w_true), config.sigma_x2,
                              config.sigma_eps2, config.literal_mi);
      double mi_d = mi_from_w(effective_w(w_disc, w_true), config.sigma_x2,
                              config.sigma_eps2, config.literal_mi);
      report.mean_mi_gen += mi_g;
      report.mean_mi_disc += mi_d;
      if (mi_g >= mi_d) report.frac_mi_gen_ge_disc += 1.0;
      break;
    }
  }
  report.mean_gen_err /= config.trials;
  report.mean_disc_err /= config.trials;
  report.mean_mi_gen /= config.trials;
  report.mean_mi_disc /= config.trials;
  report.frac_mi_gen_ge_disc /= config.trials;
  return report;
}

// -- JSON exports ------------------------------------------------------------

namespace {
void write_json_header(std::ofstream& out,
                       const std::map<std::string, std::string>& header) {
  out << "  \"header\": {";
  bool first = true;
  for (const auto& [k, v] : header) {
    if (!first) out << ", ";
    out << "\"" << k << "\": \"" << v << "\"";
    first = false;
  }
  out << "},\n";
}
}  // namespace

void write_sandbox_json(const std::string& path, const SandboxReport& report,
                        const GaussianSandboxConfig& config,
                        const std::map<std::string, std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << std::setprecision(17) << "{\n";
  write_json_header(out, header);
  out << "  \"config\": {\"d\": " << config.d << ", \"literal_mi\": "
      << (config.literal_mi ? "true" : "false") << ", \"n\": " << config.n
      << ", \"seed\": " << config.seed << ", \"sigma_eps2\": " << config.sigma_eps2
      << ", \"sigma_x2\": " << config.sigma_x2 << ", \"trials\": " << config.trials
      << ", \"w_norm\": " << config.w_norm << "},\n";
  out << "  \"frac_mi_gen_ge_disc\": " << report.frac_mi_gen_ge_disc << ",\n"
      << "  \"mean_disc_err\": " << report.mean_disc_err << ",\n"
      << "  \"mean_gen_err\": " << report.mean_gen_err << ",\n"
      << "  \"mean_mi_disc\": " << report.mean_mi_disc << ",\n"
      << "  \"mean_mi_gen\": " << report.mean_mi_gen << ",\n"
      << "  \"resampled\": " << report.resampled << ",\n"
      << "  \"trials\": " << report.trials << "\n}\n";
}

void write_mi_json(const std::string& path,
                   const std::vector<std::pair<std::string, MIEstimate>>& entries,
                   const std::map<std::string, std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << std::setprecision(17) << "{\n";
  write_json_header(out, header);
  out << "  \"estimates\": {";
  bool first = true;
  for (const auto& [name, est] : entries) {
    if (!first) out << ", ";
    out << "\"" << name << "\": {\"n_samples\": " << est.n_samples
        << ", \"steps\": " << est.curve.size() << ", \"value\": " << est.value
        << "}";
    first = false;
  }
  out << "}\n}\n";
}

}  // namespace gensr
