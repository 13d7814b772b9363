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

#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "visgp/covariance.hpp"
#include "visgp/covsel.hpp"
#include "visgp/error.hpp"
#include "visgp/simulate.hpp"

using namespace visgp;

namespace {

const CovarianceModel kMatern{CovFamily::Matern, 1.0, 3.0, 1.5, 0.01};

Eigen::MatrixXd random_matern(int n, std::mt19937_64& rng) {
  return cov_matrix(oracle::random_points(oracle::unit_square(), n, rng), kMatern, true);
}

BitMatrix path3() {
  BitMatrix g(3);
  g.set_symmetric(0, 1);
  g.set_symmetric(1, 2);
  return g;
}

// Largest |(L^-1)_ij| / sqrt(P_ii P_jj) off the graph, computed with LU.
double oracle_offgraph(const Eigen::MatrixXd& L, const BitMatrix& g) {
  const Eigen::MatrixXd P = L.fullPivLu().inverse();
  double worst = 0.0;
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < i; ++j)
      if (!g.test(i, j)) worst = std::max(worst, std::abs(P(i, j)) / std::sqrt(P(i, i) * P(j, j)));
  return worst;
}

}  // namespace

TEST_CASE("complete and empty graphs") {
  std::mt19937_64 rng(1);
  const auto K = random_matern(6, rng);
  BitMatrix full(6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < i; ++j) full.set_symmetric(i, j);
  CHECK((covsel_ips(K, full).L - K).cwiseAbs().maxCoeff() < 1e-12);

  const auto empty = covsel_ips(K, BitMatrix(6)).L;
  CHECK((empty - Eigen::MatrixXd(K.diagonal().asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("three-node path has the conditional-independence fill") {
  Eigen::MatrixXd K(3, 3);
  K << 2.0, 0.7, 0.1, 0.7, 1.5, -0.4, 0.1, -0.4, 1.2;
  const auto ips = covsel_ips(K, path3());
  CHECK(std::abs(ips.L(0, 2) - 0.7 * -0.4 / 1.5) < 1e-10);
  CHECK(constrained_residual(ips.L, K, path3()) < 1e-10);
  CHECK(oracle_offgraph(ips.L, path3()) < 1e-10);
  const auto closed = covsel_chordal(K, decompose(path3()));
  CHECK((closed.L - ips.L).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("single clique closed form returns K") {
  std::mt19937_64 rng(2);
  const auto K = random_matern(5, rng);
  BitMatrix full(5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < i; ++j) full.set_symmetric(i, j);
  CHECK((covsel_chordal(K, decompose(full)).L - K).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("IPS satisfies the selection conditions on random graphs") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 10);
    const auto K = random_matern(n, rng);
    const auto g = oracle::random_graph(n, 0.3 + 0.1 * (trial % 5), rng);
    const auto res = covsel_ips(K, g, {1e-10, 2000});
    CHECK(constrained_residual(res.L, K, g) < 1e-8);
    CHECK(oracle_offgraph(res.L, g) < 1e-8);
    CHECK(Eigen::LLT<Eigen::MatrixXd>(res.L).info() == Eigen::Success);
    CHECK(res.precision_supported_on_graph);
  }
}

TEST_CASE("IPS and closed form agree on chordal graphs") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 40);
    const auto K = random_matern(n, rng);
    const auto d = decompose(oracle::random_graph(n, 0.2, rng));
    BitMatrix g(n);
    for (const auto& c : d.cliques)
      for (std::size_t a = 0; a < c.size(); ++a)
        for (std::size_t b = 0; b < a; ++b) g.set_symmetric(c[a], c[b]);
    const auto closed = covsel_chordal(K, d);
    const auto ips = covsel_ips(K, g, {1e-12, 5000});
    CHECK((closed.L - ips.L).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(constrained_residual(closed.L, K, g) < 1e-10);
    CHECK(off_graph_precision(closed.L, g) < 1e-8);
    CHECK((chordal_precision(K, d) * closed.L - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("IPS errors") {
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
  bad(2, 2) = -1.0;
  try {
    covsel_ips(bad, path3());
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
  }

  std::mt19937_64 rng(5);
  const int n = 10;
  const auto K = random_matern(n, rng);
  BitMatrix cycle(n);
  for (int i = 0; i < n; ++i) cycle.set_symmetric(i, (i + 1) % n);
  CovSelResult best;
  try {
    covsel_ips(K, cycle, {1e-14, 1}, &best);
    FAIL("expected NoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
  }
  CHECK(best.ips_iterations == 1);
  CHECK(best.L.rows() == n);
}

TEST_CASE("visgp matrix on a convex domain is the plain covariance") {
  std::mt19937_64 rng(6);
  const auto sq = oracle::unit_square();
  const auto pts = oracle::random_points(sq, 25, rng);
  const auto res = visgp_matrix(pts, sq, kMatern);
  CHECK((res.L - cov_matrix(pts, kMatern, true)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("figure-eight exponential matrix uses geodesic distances") {
  std::mt19937_64 rng(7);
  const auto dom = make_figure_eight();
  auto pts = oracle::random_points(dom, 20, rng);
  pts.push_back({0, 0});
  const CovarianceModel m{CovFamily::Exponential, 1.3, 2.0, 0.5, 0.0};
  const auto res = visgp_matrix(pts, dom, m);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(std::abs(res.L(i, i) - 1.3) < 1e-10);
    for (std::size_t j = 0; j < i; ++j) {
      const double dg = oracle::geodesic(pts[i], pts[j], dom);
      CHECK(std::abs(res.L(i, j) - 1.3 * std::exp(-2.0 * dg)) < 1e-8);
    }
  }
}

TEST_CASE("U-domain diagonal stays at sigma2 + tau2") {
  std::mt19937_64 rng(8);
  const auto dom = make_u_domain();
  const auto pts = oracle::random_points(dom, 60, rng);
  const CovarianceModel m{CovFamily::Matern, 1.0, 0.5, 1.0, 1.0};
  const auto res = visgp_matrix(pts, dom, m);
  CHECK((res.L.diagonal().array() - 2.0).abs().maxCoeff() < 1e-8);
}
