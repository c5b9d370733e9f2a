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

#include <map>

#include "gensr/training.hpp"

namespace gensr {

// -- MINE (Donsker-Varadhan) MI estimation ----------------------------------

struct MineConfig {
  int hidden = 64;       // two hidden layers of this width
  int steps = 3000;
  int batch = 256;
  double lr = 1e-3;      // Adam
  double ema = 0.9;      // held-out bound smoothing
  double holdout_fraction = 0.2;
  int eval_every = 10;   // held-out evaluation cadence (steps)
  int tail_window = 50;  // evaluations averaged into the reported value
  uint64_t seed = 0;
};

// Critic parameters: 2-layer tanh perceptron over concat(x, y).
void create_mine_critic(ParamStore& store, int dx, int dy, int hidden, Rng& rng);
ad::Var mine_critic_forward(ad::Tape& t, ParamStore& store, ad::Var xy);

// DV bound: mean f over joint pairs minus log-mean-exp of f over marginal
// pairs (max-shifted). Throws NumericalError on non-finite values.
double mine_bound(ParamStore& critic, const Mat& joint_xy, const Mat& marginal_xy);

struct MIEstimate {
  double value = 0.0;          // tail-averaged smoothed held-out bound
  std::vector<double> curve;   // smoothed held-out bound per evaluation
  int n_samples = 0;
};

// Trains a fresh critic on paired samples (rows of X and Y); inputs are
// z-scored per column before training.
MIEstimate train_mine(const Mat& x, const Mat& y, const MineConfig& config);

// X = pooled final encoder state, Y = scalar yes-probability, one pair per
// instance of `task` (positive candidate). Needs >= 500 instances.
using RepresentationFn = std::function<std::pair<Eigen::RowVectorXd, double>(
    const EvalInstance&, int64_t candidate)>;
MIEstimate estimate_model_mi(const RepresentationFn& fwd,
                             const std::vector<EvalInstance>& instances,
                             Task task, const MineConfig& config,
                             int min_instances = 500);

// -- gradient conflict ------------------------------------------------------

// Cosine of two flattened gradients; NaN when either is exactly zero.
double gradient_cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct GradientTrace {
  std::string paradigm;
  std::vector<double> cosines;  // NaN = undefined (zero gradient)
};

GradientTrace trace_from_stats(const TrainStats& stats,
                               const std::string& paradigm);
double mean_defined(const std::vector<double>& values);
int count_negative(const std::vector<double>& values);

void write_gradient_trace_csv(const std::string& path,
                              const std::vector<GradientTrace>& traces,
                              const std::map<std::string, std::string>& header);

// -- PCA / KDE exports ------------------------------------------------------

struct PcaResult {
  Mat points;                  // M x 2
  Eigen::Vector2d explained;   // top-2 eigenvalues of the sample covariance
  Mat components;              // d x 2, sign: first nonzero loading positive
};
// Mean-centered projection onto the top-2 principal directions; M >= 3.
PcaResult pca_project(const Mat& x);

struct KdeGrid {
  int resolution = 0;
  double x0 = 0, y0 = 0, dx = 0, dy = 0;
  double bandwidth = 0;
  Mat density;  // resolution x resolution, row i = y cell, col j = x cell
};
// Isotropic Gaussian KDE on a regular grid with 3-bandwidth margins.
KdeGrid kde_density(const Mat& points2d, double bandwidth, int resolution = 64);

void write_projection_csv(const std::string& path,
                          const std::vector<std::pair<std::string, PcaResult>>& per_task,
                          const std::map<std::string, std::string>& header);
void write_kde_csv(const std::string& path, const KdeGrid& grid,
                   const std::map<std::string, std::string>& header);

// -- Gaussian theorem sandbox ------------------------------------------------

struct GaussianSandboxConfig {
  int d = 5;
  int n = 30;
  int trials = 200;
  double w_norm = 2.5;       // ||w*||
  double sigma_x2 = 1.0;
  double sigma_eps2 = 1.0;
  uint64_t seed = 0;
  bool literal_mi = false;   // printed w-form instead of analytic w^2-form
  int logistic_iters = 2000;
  double logistic_lr = 0.5;
};

struct SandboxReport {
  double mean_gen_err = 0.0;
  double mean_disc_err = 0.0;
  double mean_mi_gen = 0.0;
  double mean_mi_disc = 0.0;
  double frac_mi_gen_ge_disc = 0.0;
  int resampled = 0;
  int trials = 0;
};

// Analytic mode (default): 1/2 ln(1 + w^2 sx2/se2); literal mode: the printed
// 1/2 ln(1 + w sx2/se2), defined only for argument > -1.
double mi_from_w(double w, double sigma_x2, double sigma_eps2,
                 bool literal = false);

// Per trial: class-conditional Gaussian data, closed-form generative fit
// (class-mean difference) vs logistic regression by gradient descent;
// parameter errors and direction-based effective-scalar MI for both.
SandboxReport run_separability_experiment(const GaussianSandboxConfig& config);

void write_sandbox_json(const std::string& path, const SandboxReport& report,
                        const GaussianSandboxConfig& config,
                        const std::map<std::string, std::string>& header);
void write_mi_json(const std::string& path,
                   const std::vector<std::pair<std::string, MIEstimate>>& entries,
                   const std::map<std::string, std::string>& header);

}  // namespace gensr
