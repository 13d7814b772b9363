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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "visgp/covsel.hpp"
#include "visgp/error.hpp"
#include "visgp/predict.hpp"
#include "visgp/simulate.hpp"

using namespace visgp;

namespace {

const ModelSpec kExp{CovFamily::Exponential, 0.5};

ParamVector params(double beta0, double s2, double phi, double tau2) {
  ParamVector p;
  p.beta = Eigen::VectorXd::Constant(1, beta0);
  p.sigma2 = s2;
  p.phi = phi;
  p.tau2 = tau2;
  return p;
}

// [0,3]x[0,1] union [0,1]x[0,3]; the arms cannot see each other's far ends.
PolygonDomain l_shape() { return PolygonDomain({{0, 0}, {3, 0}, {3, 1}, {1, 1}, {1, 3}, {0, 3}}); }

struct Fixture {
  std::vector<Point2> pts;
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  VisibilityGraph g;
  DataView view() const { return {y, X, pts}; }
};

Fixture fixture(std::vector<Point2> pts, const PolygonDomain& dom, std::uint64_t seed = 1) {
  Fixture f;
  f.pts = std::move(pts);
  const auto n = static_cast<Eigen::Index>(f.pts.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  f.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) f.y(i) = std::sin(f.pts[i].x) + 0.5 * f.pts[i].y + 0.1 * nd(rng);
  f.X = intercept_design(n);
  f.g = build_visibility_graph(f.pts, dom);
  return f;
}

Eigen::VectorXd one() { return Eigen::VectorXd::Ones(1); }

// Direct kriging on neighbor set N with Sigma = C + tau2 * delta.
oracle::Krige krige_on(Point2 s, const std::vector<int>& N, const Fixture& f, const ParamVector& p) {
  const auto m = p.covariance(kExp);
  const auto q = static_cast<Eigen::Index>(N.size());
  Eigen::MatrixXd S(q, q);
  Eigen::VectorXd c(q), r(q);
  for (Eigen::Index a = 0; a < q; ++a) {
    c(a) = cov_value(m, distance(s, f.pts[N[a]])) + (s == f.pts[N[a]] ? p.tau2 : 0.0);
    r(a) = f.y(N[a]) - p.beta(0);
    for (Eigen::Index b = 0; b < q; ++b)
      S(a, b) = cov_value(m, distance(f.pts[N[a]], f.pts[N[b]])) + (a == b ? p.tau2 : 0.0);
  }
  return oracle::dense_krige(S, c, p.sigma2 + p.tau2, r, p.beta(0));
}

const std::vector<Point2> kRight = {{1.7, 0.2}, {1.8, 0.5}, {1.9, 0.3}};
const std::vector<Point2> kTop = {{0.2, 2.6}, {0.5, 2.7}, {0.3, 2.8}};

std::vector<Point2> two_arms() {
  auto v = kRight;
  v.insert(v.end(), kTop.begin(), kTop.end());
  return v;
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(to_string(PredictStrategy::NearestClique) == "nc");
  CHECK(to_string(PredictStrategy::MaxPrecision) == "mp");
  CHECK(to_string(PredictStrategy::PrecisionWeighted) == "pw");
  CHECK(parse_strategy("pw") == PredictStrategy::PrecisionWeighted);
  CHECK_THROWS_AS(parse_strategy("best"), Error);
  CHECK(to_string(PredictStatus::NoNeighbors) == "no_neighbors");
  CHECK(std::abs(interval_z(0.95) - 1.959963984540054) < 1e-12);
}

TEST_CASE("convex domain neighbor sets are the k nearest") {
  std::mt19937_64 rng(1);
  const auto sq = oracle::unit_square();
  const auto f = fixture(oracle::random_points(sq, 40, rng), sq);
  const Point2 s{0.4, 0.55};
  std::vector<int> nearest(40);
  std::iota(nearest.begin(), nearest.end(), 0);
  std::sort(nearest.begin(), nearest.end(),
            [&](int a, int b) { return distance(s, f.pts[a]) < distance(s, f.pts[b]); });
  nearest.resize(8);
  const auto nc = neighbors_nearest_clique(s, f.g, &sq, 8);
  CHECK(nc.indices == nearest);
  auto mp = neighbors_max_precision(s, f.g, &sq, 8, params(0, 1, 2, 0.1).covariance(kExp)).indices;
  std::sort(mp.begin(), mp.end());
  auto sorted = nearest;
  std::sort(sorted.begin(), sorted.end());
  CHECK(mp == sorted);
  const auto k1 = neighbors_max_precision(s, f.g, &sq, 1, params(0, 1, 2, 0.1).covariance(kExp));
  CHECK(k1.indices == std::vector<int>{nearest[0]});
}

TEST_CASE("prong tips use only the points they can see") {
  const auto fork = make_fork_domain();
  const std::vector<Point2> pts = {{-5, 4.2}, {-5.3, 3.8}, {-4.7, 3.5}, {-3, 4}, {-1, 4}, {1, 4}, {1, -6}};
  const auto f = fixture(pts, fork);
  const auto nc = neighbors_nearest_clique({-5, 4.5}, f.g, &fork, 10);
  auto idx = nc.indices;
  std::sort(idx.begin(), idx.end());
  CHECK(idx == std::vector<int>{0, 1, 2});
}

TEST_CASE("candidates across the U notch are excluded") {
  const auto u = make_u_domain();
  const Point2 s{-4.05, -5.9};
  const std::vector<Point2> pts = {{4.05, -5.9}, {-5, 5}};
  REQUIRE(distance(s, pts[0]) < distance(s, pts[1]));
  REQUIRE_FALSE(oracle::sampled_segment_inside(s, pts[0], u));
  const auto f = fixture(pts, u);
  CHECK(neighbors_nearest_clique(s, f.g, &u, 10).indices == std::vector<int>{1});
  CHECK(visible_candidates(s, pts, &u, 0) == std::vector<int>{1});
  CHECK(visible_candidates(s, pts, nullptr, 0) == std::vector<int>{0, 1});
}

TEST_CASE("max precision picks the better of two disjoint cliques") {
  const auto dom = l_shape();
  const auto f = fixture(two_arms(), dom);
  for (int a = 0; a < 3; ++a)
    for (int b = 3; b < 6; ++b) REQUIRE_FALSE(f.g.adjacent(a, b));
  const Point2 s{0.5, 0.3};
  const auto p = params(0.2, 1.0, 1.0, 0.05);
  const auto mp = neighbors_max_precision(s, f.g, &dom, 6, p.covariance(kExp));
  auto idx = mp.indices;
  std::sort(idx.begin(), idx.end());
  CHECK(idx == std::vector<int>{0, 1, 2});
  CHECK(krige_on(s, {0, 1, 2}, f, p).variance < krige_on(s, {3, 4, 5}, f, p).variance);
  // nearest-clique stops at the first point from the other arm
  const auto nc = neighbors_nearest_clique(s, f.g, &dom, 6);
  CHECK(nc.indices.size() == 3);
}

TEST_CASE("kriging against a dense oracle") {
  std::mt19937_64 rng(3);
  const auto sq = oracle::unit_square();
  const auto f = fixture(oracle::random_points(sq, 30, rng), sq);
  const auto p = params(0.4, 1.2, 2.5, 0.08);
  std::vector<int> all(30);
  std::iota(all.begin(), all.end(), 0);
  for (const Point2 s : {Point2{0.3, 0.3}, Point2{0.9, 0.1}, f.pts[4]}) {
    const auto got = predict_at(s, one(), all, f.view(), p, kExp, 0.95);
    const auto want = krige_on(s, all, f, p);
    CHECK(std::abs(got.mean - want.mean) < 1e-9);
    CHECK(std::abs(got.variance - want.variance) < 1e-9);
    CHECK(got.lower <= got.mean);
    CHECK(got.mean <= got.upper);
    CHECK(got.neighbor_count == 30);
  }
}

TEST_CASE("noise-free kriging interpolates observed sites") {
  std::mt19937_64 rng(4);
  const auto sq = oracle::unit_square();
  const auto f = fixture(oracle::random_points(sq, 12, rng), sq);
  const auto p = params(0.0, 1.0, 2.0, 0.0);
  std::vector<int> all(12);
  std::iota(all.begin(), all.end(), 0);
  const auto got = predict_at(f.pts[5], one(), all, f.view(), p, kExp, 0.9);
  CHECK(std::abs(got.mean - f.y(5)) < 1e-8);
  CHECK(std::abs(got.variance) < 1e-8);
  CHECK_THROWS_AS(predict_at(f.pts[5], one(), std::vector<int>{}, f.view(), p, kExp, 0.9), Error);
}

TEST_CASE("interval width grows with the level") {
  std::mt19937_64 rng(5);
  const auto sq = oracle::unit_square();
  const auto f = fixture(oracle::random_points(sq, 10, rng), sq);
  const auto p = params(0.0, 1.0, 2.0, 0.1);
  const std::vector<int> N = {0, 1, 2};
  double prev = 0.0;
  for (double level : {0.5, 0.8, 0.9, 0.95, 0.99}) {
    const auto r = predict_at({0.5, 0.5}, one(), N, f.view(), p, kExp, level);
    CHECK(r.upper - r.lower > prev);
    prev = r.upper - r.lower;
  }
}

TEST_CASE("precision weighting") {
  const auto dom = l_shape();
  const auto p = params(0.2, 1.0, 1.0, 0.05);

  SUBCASE("single clique reduces to plain kriging") {
    const std::vector<Point2> pts = {{0.2, 0.2}, {0.6, 0.4}, {0.4, 0.8}};
    const auto f = fixture(pts, dom);
    const auto pw = predict_precision_weighted({0.5, 0.5}, one(), f.g, &dom, 10, f.view(), p, kExp, 0.95);
    const auto direct = predict_at({0.5, 0.5}, one(), std::vector<int>{0, 1, 2}, f.view(), p, kExp, 0.95);
    CHECK(std::abs(pw.mean - direct.mean) < 1e-12);
    CHECK(std::abs(pw.variance - direct.variance) < 1e-12);
    CHECK(pw.strategy == PredictStrategy::PrecisionWeighted);
  }

  SUBCASE("mirror-image cliques get equal weight") {
    // reflect a far right-arm cluster into the top arm so both cliques are congruent
    std::vector<Point2> pts = {{2.3, 0.2}, {2.4, 0.5}, {2.6, 0.3}};
    for (int i = 0; i < 3; ++i) pts.push_back({pts[i].y, pts[i].x});
    const auto f = fixture(pts, dom);
    const Point2 s{0.4, 0.4};
    const auto pw = predict_precision_weighted(s, one(), f.g, &dom, 6, f.view(), p, kExp, 0.95);
    const auto a = krige_on(s, {0, 1, 2}, f, p);
    const auto b = krige_on(s, {3, 4, 5}, f, p);
    REQUIRE(std::abs(a.variance - b.variance) < 1e-12);
    CHECK(std::abs(pw.mean - 0.5 * (a.mean + b.mean)) < 1e-10);
    CHECK(std::abs(pw.variance - a.variance / 2) < 1e-10);
    CHECK(pw.neighbor_count == 6);
  }

  SUBCASE("combined mean lies between clique means") {
    const auto f = fixture(two_arms(), dom, 7);
    const Point2 s{0.5, 0.3};
    const auto pw = predict_precision_weighted(s, one(), f.g, &dom, 6, f.view(), p, kExp, 0.95);
    const auto a = krige_on(s, {0, 1, 2}, f, p);
    const auto b = krige_on(s, {3, 4, 5}, f, p);
    CHECK(pw.mean >= std::min(a.mean, b.mean) - 1e-12);
    CHECK(pw.mean <= std::max(a.mean, b.mean) + 1e-12);
    CHECK(pw.variance < std::min(a.variance, b.variance));
  }
}

TEST_CASE("emitted neighbor sets are visible cliques") {
  std::mt19937_64 rng(6);
  const auto fork = make_fork_domain();
  const auto f = fixture(oracle::random_points(fork, 120, rng), fork);
  const auto model = params(0, 1, 0.5, 0.05).covariance(kExp);
  for (const auto& s : oracle::random_points(fork, 25, rng)) {
    for (const auto& ns : {neighbors_nearest_clique(s, f.g, &fork, 10), neighbors_max_precision(s, f.g, &fork, 10, model)}) {
      CHECK(ns.indices.size() >= 1);
      CHECK(ns.indices.size() <= 10);
      for (std::size_t a = 0; a < ns.indices.size(); ++a) {
        CHECK(oracle::sampled_segment_inside(s, f.pts[ns.indices[a]], fork, 2000));
        for (std::size_t b = 0; b < a; ++b) CHECK(f.g.adjacent(ns.indices[a], ns.indices[b]));
      }
    }
  }
}

TEST_CASE("marginal variance is stationary") {
  std::mt19937_64 rng(8);
  const auto model = CovarianceModel{CovFamily::Exponential, 1.3, 0.8, 0.5, 0.2};
  for (const auto& dom : {oracle::unit_square(), make_u_domain()}) {
    const auto pts = oracle::random_points(dom, 50, rng);
    const auto g = build_visibility_graph(pts, dom);
    const auto L = covsel_chordal(cov_matrix(pts, model, true), decompose(g.adjacency)).L;
    CHECK(std::abs(L(7, 7) - 1.5) < 1e-10);
    for (const auto& s : oracle::random_points(dom, 20, rng))
      CHECK(std::abs(marginal_variance_at(s, g, &dom, L, model) - 1.5) < 1e-8);
  }
}

TEST_CASE("sites with nothing visible") {
  const auto fork = make_fork_domain();
  const auto f = fixture({{-5, 4}, {-5, 3}}, fork);
  const std::vector<Point2> sites = {{1, 4}, {-5, 3.5}};
  const auto p = params(0.7, 1.0, 0.5, 0.1);
  PredictOptions opts;
  const Eigen::MatrixXd sx = Eigen::MatrixXd::Ones(2, 1);
  auto r = predict_sites(sites, sx, f.g, &fork, f.view(), p, kExp, opts);
  CHECK(r[0].status == PredictStatus::NoNeighbors);
  CHECK(std::isnan(r[0].mean));
  CHECK(r[1].status == PredictStatus::Ok);
  opts.prior_fallback = true;
  r = predict_sites(sites, sx, f.g, &fork, f.view(), p, kExp, opts);
  CHECK(r[0].status == PredictStatus::PriorFallback);
  CHECK(r[0].mean == doctest::Approx(0.7));
  CHECK(r[0].variance == doctest::Approx(1.1));

  try {
    neighbors_nearest_clique({1, 4}, f.g, &fork, 10);
    FAIL("expected NoVisibleNeighbors");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoVisibleNeighbors);
  }
  const std::vector<Point2> outside = {{-4, 4}};
  CHECK_THROWS_AS(predict_sites(outside, Eigen::MatrixXd::Ones(1, 1), f.g, &fork, f.view(), p, kExp, opts), Error);
}

TEST_CASE("site predictions match single-site calls for every strategy") {
  std::mt19937_64 rng(9);
  const auto u = make_u_domain();
  const auto f = fixture(oracle::random_points(u, 80, rng), u);
  const auto sites = oracle::random_points(u, 15, rng);
  const auto p = params(0.1, 1.0, 0.4, 0.05);
  for (auto strat : {PredictStrategy::NearestClique, PredictStrategy::MaxPrecision, PredictStrategy::PrecisionWeighted}) {
    PredictOptions opts;
    opts.strategy = strat;
    const auto all = predict_sites(sites, Eigen::MatrixXd::Ones(15, 1), f.g, &u, f.view(), p, kExp, opts);
    for (std::size_t i = 0; i < sites.size(); ++i) {
      Prediction one_site;
      if (strat == PredictStrategy::PrecisionWeighted) {
        one_site = predict_precision_weighted(sites[i], one(), f.g, &u, 10, f.view(), p, kExp, 0.95);
      } else {
        const auto ns = strat == PredictStrategy::NearestClique
                            ? neighbors_nearest_clique(sites[i], f.g, &u, 10)
                            : neighbors_max_precision(sites[i], f.g, &u, 10, p.covariance(kExp));
        one_site = predict_at(sites[i], one(), ns.indices, f.view(), p, kExp, 0.95);
      }
      CHECK(all[i].mean == one_site.mean);
      CHECK(all[i].variance == one_site.variance);
      CHECK(all[i].strategy == strat);
      CHECK(all[i].variance >= 0.0);
    }
  }
}
