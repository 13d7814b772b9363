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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "visgp/estimate.hpp"
#include "visgp/geometry.hpp"
#include "visgp/visgraph.hpp"

namespace visgp {

enum class PredictStrategy { NearestClique, MaxPrecision, PrecisionWeighted };

/// "nc", "mp", "pw".
std::string to_string(PredictStrategy s);
PredictStrategy parse_strategy(const std::string& name);

struct NeighborSet {
  Point2 site;
  std::vector<int> indices;
  PredictStrategy strategy = PredictStrategy::NearestClique;
  int k = 0;
};

enum class PredictStatus { Ok, NoNeighbors, PriorFallback };

/// "ok", "no_neighbors", "prior_fallback".
std::string to_string(PredictStatus s);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  int neighbor_count = 0;
  PredictStrategy strategy = PredictStrategy::NearestClique;
  PredictStatus status = PredictStatus::Ok;
};

// In the functions below a null domain makes every observation visible from
// every site, which is the Euclidean-GP baseline.

/// Observations visible from s (and within d_max), nearest first with ties
/// broken by index. Stops after `limit` hits when limit > 0.
std::vector<int> visible_candidates(Point2 s, std::span<const Point2> points, const PolygonDomain* dom, int limit,
                                    std::optional<double> d_max = std::nullopt);

/// Nearest visible observations added one at a time while they stay pairwise
/// adjacent in g. Throws NoVisibleNeighbors when nothing is visible.
NeighborSet neighbors_nearest_clique(Point2 s, const VisibilityGraph& g, const PolygonDomain* dom, int k);

/// Among the maximal cliques of g restricted to the k nearest visible
/// observations, the one with the smallest conditional variance at s.
NeighborSet neighbors_max_precision(Point2 s, const VisibilityGraph& g, const PolygonDomain* dom, int k,
                                    const CovarianceModel& model);

/// Kriging from neighbor set N under Sigma = C + tau2 * delta. The variance
/// is for a new noisy observation at s. Throws NumericalFailure if Sigma(N,N)
/// cannot be factored.
Prediction predict_at(Point2 s, const Eigen::VectorXd& x_s, std::span<const int> N, const DataView& data,
                      const ParamVector& p, const ModelSpec& spec, double level);

/// Disjoint cliques peeled off greedily (largest first) from the k nearest
/// visible observations; clique predictions are combined by precision.
/// The combined variance 1 / sum(precision) treats the clique predictors as
/// independent and is therefore approximate.
Prediction predict_precision_weighted(Point2 s, const Eigen::VectorXd& x_s, const VisibilityGraph& g,
                                      const PolygonDomain* dom, int k, const DataView& data, const ParamVector& p,
                                      const ModelSpec& spec, double level);

/// Unconditional variance of the extended process at s,
/// B(s) L(N,N) B(s)' + F(s), with N the nearest-clique neighbor set and L
/// the covariance-selection matrix of the observations.
double marginal_variance_at(Point2 s, const VisibilityGraph& g, const PolygonDomain* dom, const Eigen::MatrixXd& L,
                            const CovarianceModel& model, int k = 10);

struct PredictOptions {
  PredictStrategy strategy = PredictStrategy::MaxPrecision;
  int k = 10;
  double level = 0.95;
  /// Sites without visible observations get the prior mean and variance.
  bool prior_fallback = false;

  void validate() const;
};

/// Site-wise predictions, in parallel over sites. `site_X` has one row per
/// site with the same columns as data.X. Sites with no visible observation
/// come back with status NoNeighbors and NaN values, or PriorFallback when
/// that option is set.
std::vector<Prediction> predict_sites(std::span<const Point2> sites, const Eigen::MatrixXd& site_X,
                                      const VisibilityGraph& g, const PolygonDomain* dom, const DataView& data,
                                      const ParamVector& p, const ModelSpec& spec, const PredictOptions& opts);

/// Standard normal quantile at (1 + level) / 2.
double interval_z(double level);

}  // namespace visgp
