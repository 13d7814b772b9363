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

#include "visgp/covsel.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "visgp/error.hpp"
#include "visgp/log.hpp"

namespace visgp {
namespace {

Eigen::MatrixXd gather(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) out(a, b) = m(idx[a], idx[b]);
  }
  return out;
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, what);
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

}  // namespace

double constrained_residual(const Eigen::MatrixXd& L, const Eigen::MatrixXd& K, const BitMatrix& adjacency) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < K.rows(); ++i) {
    r = std::max(r, std::abs(L(i, i) - K(i, i)));
    for (Eigen::Index j = 0; j < i; ++j) {
      if (adjacency.test(static_cast<int>(i), static_cast<int>(j))) r = std::max(r, std::abs(L(i, j) - K(i, j)));
    }
  }
  return r;
}

double off_graph_precision(const Eigen::MatrixXd& L, const BitMatrix& adjacency) {
  const Eigen::MatrixXd P = spd_inverse(L, "L is not positive definite");
  double r = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (!adjacency.test(static_cast<int>(i), static_cast<int>(j))) {
        r = std::max(r, std::abs(P(i, j)) / std::sqrt(P(i, i) * P(j, j)));
      }
    }
  }
  return r;
}

CovSelResult covsel_ips(const Eigen::MatrixXd& K, const BitMatrix& adjacency, IpsOptions opts, CovSelResult* best) {
  std::vector<int> all(adjacency.size());
  std::iota(all.begin(), all.end(), 0);
  return covsel_ips(K, adjacency, maximal_cliques(adjacency, all), opts, best);
}

CovSelResult covsel_ips(const Eigen::MatrixXd& K, const BitMatrix& adjacency,
                        const std::vector<std::vector<int>>& cliques, IpsOptions opts, CovSelResult* best) {
  const Eigen::Index n = K.rows();
  if (K.cols() != n || n != adjacency.size()) throw Error(ErrorCode::InvalidInput, "K and graph sizes differ");
  if (!(opts.tol > 0)) throw Error(ErrorCode::InvalidInput, "tol must be positive");
  if (Eigen::LLT<Eigen::MatrixXd>(K).info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "K fails Cholesky factorization");
  }

  std::vector<Eigen::MatrixXd> target;
  target.reserve(cliques.size());
  for (const auto& c : cliques) target.push_back(gather(K, c));

  const double tol = opts.tol * K.diagonal().maxCoeff();
  CovSelResult res;
  res.L = K.diagonal().asDiagonal();

  for (int sweep = 1; sweep <= opts.max_iter; ++sweep) {
    for (std::size_t ci = 0; ci < cliques.size(); ++ci) {
      const auto& c = cliques[ci];
      const auto m = static_cast<Eigen::Index>(c.size());
      Eigen::MatrixXd cols(n, m);
      for (Eigen::Index a = 0; a < m; ++a) cols.col(a) = res.L.col(c[a]);
      const Eigen::MatrixXd block = gather(res.L, c);
      Eigen::LLT<Eigen::MatrixXd> llt(block);
      if (llt.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "IPS clique block lost definiteness");
      // W = L[:,c] L[c,c]^-1 ; L <- L + W (K[c,c] - L[c,c]) W'
      const Eigen::MatrixXd W = llt.solve(cols.transpose()).transpose();
      res.L.noalias() += W * (target[ci] - block) * W.transpose();
      res.L = 0.5 * (res.L + res.L.transpose()).eval();
    }
    res.ips_iterations = sweep;
    res.max_entry_residual = constrained_residual(res.L, K, adjacency);
    res.sweep_residuals.push_back(res.max_entry_residual);
    if (res.max_entry_residual < tol) {
      res.precision_supported_on_graph = true;
      return res;
    }
  }
  log::warn("ips_no_convergence", "sweeps=" + std::to_string(opts.max_iter) +
                                      " residual=" + std::to_string(res.max_entry_residual));
  if (best) *best = res;
  throw Error(ErrorCode::NoConvergence, "IPS residual " + std::to_string(res.max_entry_residual) +
                                            " after " + std::to_string(opts.max_iter) + " sweeps");
}

Eigen::MatrixXd chordal_precision(const Eigen::MatrixXd& K, const ChordalDecomposition& decomp) {
  const Eigen::Index n = K.rows();
  if (K.cols() != n || n != decomp.n) throw Error(ErrorCode::InvalidInput, "K and decomposition sizes differ");
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  auto scatter = [&](const std::vector<int>& idx, double sign, const char* what) {
    if (idx.empty()) return;
    const Eigen::MatrixXd inv = spd_inverse(gather(K, idx), what);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = 0; b < idx.size(); ++b) P(idx[a], idx[b]) += sign * inv(a, b);
    }
  };
  for (std::size_t i = 0; i < decomp.size(); ++i) {
    scatter(decomp.cliques[i], 1.0, "clique block is not positive definite");
    scatter(decomp.separators[i], -1.0, "separator block is not positive definite");
  }
  return P;
}

CovSelResult covsel_chordal(const Eigen::MatrixXd& K, const ChordalDecomposition& decomp) {
  const Eigen::MatrixXd P = chordal_precision(K, decomp);
  CovSelResult res;
  res.L = spd_inverse(P, "assembled precision is not positive definite");
  res.L = 0.5 * (res.L + res.L.transpose()).eval();
  res.precision_supported_on_graph = true;
  for (const auto& c : decomp.cliques) {
    for (int a : c) {
      for (int b : c) res.max_entry_residual = std::max(res.max_entry_residual, std::abs(res.L(a, b) - K(a, b)));
    }
  }
  return res;
}

CovSelResult visgp_matrix(std::span<const Point2> points, const PolygonDomain& dom, const CovarianceModel& model,
                          std::optional<double> d_max) {
  const VisibilityGraph g = build_visibility_graph(points, dom, d_max);
  const ChordalDecomposition decomp = decompose(g.adjacency);
  return covsel_chordal(cov_matrix(points, model, true), decomp);
}

}  // namespace visgp
