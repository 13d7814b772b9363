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
#include <vector>

#include "visgp/covariance.hpp"
#include "visgp/geometry.hpp"
#include "visgp/visgraph.hpp"

namespace visgp {

/// Result of covariance selection: the unique SPD matrix L that matches K on
/// the diagonal and on graph edges, with zero precision off the graph.
struct CovSelResult {
  Eigen::MatrixXd L;
  bool precision_supported_on_graph = false;
  int ips_iterations = 0;
  double max_entry_residual = 0.0;
  /// Constrained-entry residual after each full IPS sweep (empty for the
  /// closed form).
  std::vector<double> sweep_residuals;
};

struct IpsOptions {
  double tol = 1e-8;  // relative to max diag(K)
  int max_iter = 500;  // full sweeps over the cliques
};

/// Iterative proportional scaling over the maximal cliques of `adjacency`.
/// Throws NotPositiveDefinite if K fails to factor. On hitting max_iter it
/// throws NoConvergence; `best` (when given) receives the final iterate.
CovSelResult covsel_ips(const Eigen::MatrixXd& K, const BitMatrix& adjacency, IpsOptions opts = {},
                        CovSelResult* best = nullptr);

/// Same, but iterating over a caller-supplied clique cover.
CovSelResult covsel_ips(const Eigen::MatrixXd& K, const BitMatrix& adjacency,
                        const std::vector<std::vector<int>>& cliques, IpsOptions opts = {},
                        CovSelResult* best = nullptr);

/// Closed form on a decomposable graph:
/// P = sum pad(K[C,C]^-1) - sum pad(K[S,S]^-1), L = P^-1.
CovSelResult covsel_chordal(const Eigen::MatrixXd& K, const ChordalDecomposition& decomp);

/// Precision assembled by the closed form, without inverting it.
Eigen::MatrixXd chordal_precision(const Eigen::MatrixXd& K, const ChordalDecomposition& decomp);

/// Largest |L_ij - K_ij| over the diagonal and the edges of `adjacency`.
double constrained_residual(const Eigen::MatrixXd& L, const Eigen::MatrixXd& K, const BitMatrix& adjacency);

/// Largest |P_ij| / sqrt(P_ii P_jj) over non-edges, where P = L^-1.
double off_graph_precision(const Eigen::MatrixXd& L, const BitMatrix& adjacency);

/// Visibility graph, chordal completion, then the closed form on C + tau2 I.
CovSelResult visgp_matrix(std::span<const Point2> points, const PolygonDomain& dom, const CovarianceModel& model,
                          std::optional<double> d_max = std::nullopt);

}  // namespace visgp
