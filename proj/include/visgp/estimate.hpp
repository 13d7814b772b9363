// Copyright 2026 The visgp Authors.
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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "visgp/covariance.hpp"
#include "visgp/geometry.hpp"
#include "visgp/visgraph.hpp"

namespace visgp {

/// Parent covariance family with its fixed smoothness.
struct ModelSpec {
  CovFamily family = CovFamily::Exponential;
  double nu = 0.5;
};

/// Regression coefficients plus covariance parameters in natural scale.
/// Optimizers work on z = (beta, log sigma2, log phi, log tau2).
struct ParamVector {
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  double phi = 1.0;
  double tau2 = 0.1;

  Eigen::Index dim() const { return beta.size() + 3; }
  Eigen::VectorXd to_unconstrained() const;
  static ParamVector from_unconstrained(const Eigen::VectorXd& z, Eigen::Index p);
  CovarianceModel covariance(const ModelSpec& spec) const;
};

/// Y = X beta + w, observed at `points`, with the chordal decomposition of
/// their (completed) visibility graph.
struct RegressionData {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<Point2> points;
  ChordalDecomposition decomp;

  Eigen::Index n() const { return y.size(); }
  /// Throws InvalidInput on inconsistent sizes or non-finite values.
  void validate() const;
};

/// Intercept-only design.
Eigen::MatrixXd intercept_design(Eigen::Index n);

struct LikelihoodOptions {
  ModelSpec model;
  /// Blocks with more points than this use the nearest-neighbor approximation.
  std::size_t nngp_threshold = 300;
  int nngp_neighbors = 15;
};

/// Log-likelihood and its gradient in unconstrained coordinates.
struct LogLikGrad {
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// Read-only view of a response vector, design and locations.
struct DataView {
  const Eigen::VectorXd& y;
  const Eigen::MatrixXd& X;
  std::span<const Point2> points;
};

/// Dense Gaussian log-density of y[idx] under N(X[idx] beta, C + tau2 I).
/// Throws NumericalFailure if the block cannot be factored after jitter.
double block_loglik(const DataView& data, std::span<const int> idx, const ParamVector& p, const ModelSpec& spec);
LogLikGrad block_loglik_grad(const DataView& data, std::span<const int> idx, const ParamVector& p,
                             const ModelSpec& spec);

/// Vecchia approximation of a block log-density: points ordered by x (ties
/// by index), each conditioned on up to m nearest earlier points.
double clique_loglik_nngp(const Eigen::VectorXd& y_block, const Eigen::MatrixXd& X_block,
                          std::span<const Point2> points_block, const ParamVector& p, const ModelSpec& spec, int m);

/// Component i of the decomposition: log f(Y(K_i)) - log f(Y(S_i)).
LogLikGrad component_loglik_grad(const RegressionData& data, std::size_t i, const ParamVector& p,
                                 const LikelihoodOptions& opts);

double chordal_loglik(const RegressionData& data, const ParamVector& p, const LikelihoodOptions& opts);
LogLikGrad chordal_loglik_grad(const RegressionData& data, const ParamVector& p, const LikelihoodOptions& opts);

enum class FitMethod { FullMLE, GraphSGD };
std::string to_string(FitMethod m);

struct TraceEntry {
  int iteration = 0;
  int component = -1;  // -1 for full-likelihood entries
  double value = 0.0;
};

struct FitResult {
  ParamVector params;
  double loglik = 0.0;
  std::vector<TraceEntry> trace;
  bool converged = false;
  FitMethod method = FitMethod::FullMLE;
  int iterations = 0;
  double grad_norm = 0.0;
};

struct FullFitOptions {
  double gtol = 1e-6;
  int max_iter = 200;
  /// Also converged once an accepted step improves the log-likelihood by less
  /// than ftol * max(1, |loglik|).
  double ftol = 1e-11;
};

/// BFGS ascent on chordal_loglik. Never throws NoConvergence itself; a fit
/// that stops early comes back with converged = false.
FitResult fit_full(const RegressionData& data, const ParamVector& init, const LikelihoodOptions& opts,
                   FullFitOptions fit_opts = {});

struct SgdConfig {
  double alpha = 0.01;
  double decay = 0.9;
  double epsilon = 1e-8;
  /// Epochs; 0 picks ceil(5000 / cliques) so about 5,000 component steps run.
  int epochs = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// RMSProp ascent over clique-separator components, reshuffled every epoch.
FitResult fit_sgd(const RegressionData& data, const ParamVector& init, const SgdConfig& cfg,
                  const LikelihoodOptions& opts);

/// beta by least squares, sigma2 = tau2 = residual variance / 2,
/// phi = 3 / domain_diameter.
ParamVector initial_params(const RegressionData& data, double domain_diameter);

}  // namespace visgp
