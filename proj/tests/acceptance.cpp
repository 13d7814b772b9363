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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "visgp/covsel.hpp"
#include "visgp/error.hpp"
#include "visgp/estimate.hpp"
#include "visgp/log.hpp"
#include "visgp/predict.hpp"
#include "visgp/simulate.hpp"

using namespace visgp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

BitMatrix graph_of(const ChordalDecomposition& d) {
  BitMatrix g(d.n);
  for (const auto& c : d.cliques)
    for (std::size_t a = 0; a < c.size(); ++a)
      for (std::size_t b = 0; b < a; ++b) g.set_symmetric(c[a], c[b]);
  return g;
}

double offgraph_lu(const Eigen::MatrixXd& L, const BitMatrix& g) {
  const Eigen::MatrixXd P = L.fullPivLu().inverse();
  double worst = 0.0;
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < i; ++j)
      if (!g.test(i, j)) worst = std::max(worst, std::abs(P(i, j)) / std::sqrt(P(i, i) * P(j, j)));
  return worst;
}

// 200 random instances: IPS meets the selection conditions, and on chordal
// graphs it matches the closed form.
Outcome covsel_correctness() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double nus[] = {0.5, 1.0, 1.5, 2.5};
  double worst_entry = 0, worst_zero = 0, worst_agree = 0;
  int chordal = 0, not_pd = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 10);
    const CovarianceModel m{CovFamily::Matern, 0.5 + u(rng), 1.0 + 5.0 * u(rng), nus[trial % 4], 0.01 + 0.1 * u(rng)};
    const auto K = cov_matrix(oracle::random_points(oracle::unit_square(), n, rng), m, true);
    BitMatrix g = oracle::random_graph(n, 0.15 + 0.7 * u(rng), rng);
    if (trial % 2 == 0) g = chordal_completion(g).adjacency;
    const auto ips = covsel_ips(K, g, {1e-11, 5000});
    worst_entry = std::max(worst_entry, constrained_residual(ips.L, K, g));
    worst_zero = std::max(worst_zero, offgraph_lu(ips.L, g));
    if (Eigen::LLT<Eigen::MatrixXd>(ips.L).info() != Eigen::Success) ++not_pd;
    if (oracle::simplicial_chordal(g)) {
      ++chordal;
      worst_agree = std::max(worst_agree, (covsel_chordal(K, decompose(g)).L - ips.L).cwiseAbs().maxCoeff());
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst_entry < 1e-8 && worst_zero < 1e-8 && worst_agree < 1e-8 && not_pd == 0 && secs < 60,
          fmt("entry=%.2e offgraph=%.2e ips-vs-closed=%.2e over %d chordal, non-PD=%d, %.1fs", worst_entry,
              worst_zero, worst_agree, chordal, not_pd, secs)};
}

// Union-of-convex fixtures with junctions in V: the exponential visGP matrix
// is the exponential covariance of geodesic distance.
Outcome union_of_convex_exactness() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  struct Case {
    PolygonDomain dom;
    std::vector<Point2> junctions;
  };
  const Case cases[] = {{make_figure_eight(), {{0, 0}}}, {make_three_lobe_chain(), {{0, 0}, {1, 0}}}};
  const CovarianceModel models[] = {{CovFamily::Exponential, 1.0, 1.0, 0.5, 0.0},
                                    {CovFamily::Exponential, 2.5, 3.0, 0.5, 0.0},
                                    {CovFamily::Exponential, 0.7, 0.3, 0.5, 0.0}};
  for (const auto& c : cases) {
    auto pts = oracle::random_points(c.dom, 30 - static_cast<int>(c.junctions.size()), rng);
    pts.insert(pts.begin(), c.junctions.begin(), c.junctions.end());
    std::vector<double> geo(pts.size() * pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) geo[i * pts.size() + j] = oracle::geodesic(pts[i], pts[j], c.dom);
    for (const auto& m : models) {
      const auto L = visgp_matrix(pts, c.dom, m).L;
      for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
          worst = std::max(worst, std::abs(L(i, j) - m.sigma2 * std::exp(-m.phi * geo[i * pts.size() + j])));
    }
  }
  return {worst < 1e-8, fmt("max |L_ij - s2 exp(-phi d_geo)| = %.2e (n=30, 2 fixtures x 3 models)", worst)};
}

// Unconditional variance at 100 off-V sites per fixture equals sigma2 + tau2.
Outcome marginal_stationarity() {
  std::mt19937_64 rng(303);
  struct Case {
    const char* name;
    PolygonDomain dom;
    CovarianceModel model;
  };
  const Case cases[] = {{"fork", make_fork_domain(), {CovFamily::Exponential, 1.0, 0.5, 0.5, 0.1}},
                        {"u", make_u_domain(), {CovFamily::Matern, 1.0, 0.5, 1.0, 1.0}},
                        {"figure8", make_figure_eight(), {CovFamily::Exponential, 1.5, 2.0, 0.5, 0.2}}};
  double worst = 0.0;
  int failures = 0, sites = 0;
  for (const auto& c : cases) {
    const auto pts = oracle::random_points(c.dom, 120, rng);
    const auto g = build_visibility_graph(pts, c.dom);
    const auto L = covsel_chordal(cov_matrix(pts, c.model, true), decompose(g.adjacency)).L;
    const double target = c.model.sigma2 + c.model.tau2;
    for (const auto& s : oracle::random_points(c.dom, 100, rng)) {
      ++sites;
      try {
        worst = std::max(worst, std::abs(marginal_variance_at(s, g, &c.dom, L, c.model) - target));
      } catch (const Error& e) {
        ++failures;
      }
    }
  }
  return {worst < 1e-8 && failures == 0,
          fmt("max |var - (s2+t2)| = %.2e over %d sites, %d without neighbors", worst, sites, failures)};
}

RegressionData fixture_data(const PolygonDomain& dom, int n, std::mt19937_64& rng, int covariates) {
  RegressionData d;
  d.points = oracle::random_points(dom, n, rng);
  std::normal_distribution<double> nd;
  d.X = Eigen::MatrixXd::Ones(n, 1 + covariates);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < covariates; ++c) d.X(i, 1 + c) = nd(rng);
    d.y(i) = std::sin(d.points[i].x) + 0.2 * d.points[i].y + 0.2 * nd(rng);
  }
  d.decomp = decompose(build_visibility_graph(d.points, dom).adjacency);
  return d;
}

ParamVector random_params(Eigen::Index p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ParamVector q;
  q.beta.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) q.beta(i) = u(rng);
  q.sigma2 = std::exp(u(rng));
  q.phi = std::exp(u(rng));
  q.tau2 = std::exp(u(rng) - 1.5);
  return q;
}

// Decomposable likelihood equals the dense density under the covariance
// selection matrix, which is computed independently by IPS.
Outcome likelihood_identity() {
  std::mt19937_64 rng(404);
  double worst = 0.0;
  int instances = 0;
  const PolygonDomain doms[] = {make_fork_domain(), make_u_domain(), make_three_lobe_chain()};
  for (int trial = 0; trial < 24; ++trial) {
    const int n = 10 + static_cast<int>(rng() % 41);
    const auto d = fixture_data(doms[trial % 3], n, rng, trial % 2);
    const auto p = random_params(d.X.cols(), rng);
    const ModelSpec spec = trial % 4 < 2 ? ModelSpec{CovFamily::Exponential, 0.5} : ModelSpec{CovFamily::Matern, 1.5};
    const auto K = cov_matrix(d.points, p.covariance(spec), true);
    const auto L = covsel_ips(K, graph_of(d.decomp), {1e-13, 50000}).L;
    worst = std::max(worst, std::abs(chordal_loglik(d, p, {spec}) - oracle::dense_logpdf(d.y, d.X * p.beta, L)));
    ++instances;
  }
  return {worst < 1e-6, fmt("max |decomposable - dense| = %.2e over %d instances, n<=50", worst, instances)};
}

// Analytic gradient against central differences with h = 1e-5.
Outcome gradient_check() {
  std::mt19937_64 rng(505);
  const auto d = fixture_data(make_fork_domain(), 20, rng, 1);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_params(2, rng);
    const ModelSpec spec = trial % 2 ? ModelSpec{CovFamily::Exponential, 0.5} : ModelSpec{CovFamily::Matern, 1.5};
    const auto g = chordal_loglik_grad(d, p, {spec}).grad;
    const Eigen::VectorXd z = p.to_unconstrained();
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      const double h = 1e-5;
      Eigen::VectorXd zp = z, zm = z;
      zp(k) += h;
      zm(k) -= h;
      const double fd = (chordal_loglik(d, ParamVector::from_unconstrained(zp, 2), {spec}) -
                         chordal_loglik(d, ParamVector::from_unconstrained(zm, 2), {spec})) /
                        (2 * h);
      worst = std::max(worst, std::abs(g(k) - fd) / std::max(std::abs(fd), 1e-8));
    }
  }
  return {worst < 1e-4, fmt("max relative error %.2e over 50 points x 5 coordinates (n=20)", worst)};
}

struct ForkSample {
  RegressionData data;
  double diameter;
};

ForkSample fork_sample(int n, std::uint64_t seed) {
  SimScenario sc;
  sc.seed = seed;
  const auto dom = sc.resolve_domain();
  const auto pool = make_pool(sc, dom);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(pool.points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  std::normal_distribution<double> noise(0.0, 0.1);
  ForkSample s;
  s.diameter = dom.diameter();
  s.data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    s.data.points.push_back(pool.points[idx[i]]);
    s.data.y(i) = pool.truth[idx[i]] + noise(rng);
  }
  s.data.X = intercept_design(n);
  s.data.decomp = decompose(build_visibility_graph(s.data.points, dom).adjacency);
  return s;
}

// Graph SGD reaches the full-likelihood optimum to within 1%. The run uses a
// slow RMSProp decay; with decay 0.9 the current component carries a tenth of
// the second-moment average, which biases the fixed point, and that gap is
// reported alongside.
Outcome sgd_adequacy() {
  const auto s = fork_sample(1200, 606);
  const LikelihoodOptions opts;
  const auto init = initial_params(s.data, s.diameter);
  const auto t0 = std::chrono::steady_clock::now();
  const auto full = fit_full(s.data, init, opts);
  const double t_full = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  SgdConfig slow;
  slow.decay = 0.999;
  const auto sgd = fit_sgd(s.data, init, slow, opts);
  const double t_sgd = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() - t_full;
  const auto sgd_default = fit_sgd(s.data, init, SgdConfig{}, opts);
  const double rel = std::abs(sgd.loglik - full.loglik) / std::abs(full.loglik);
  const double rel_default = std::abs(sgd_default.loglik - full.loglik) / std::abs(full.loglik);
  return {rel <= 0.01 && std::isfinite(sgd.loglik),
          fmt("full=%.3f (converged=%d, %.1fs) sgd=%.3f (decay 0.999, %zu steps, %.1fs) relative gap %.4f; "
              "decay 0.9 gap %.4f; %zu cliques",
              full.loglik, full.converged ? 1 : 0, t_full, sgd.loglik, sgd.trace.size(), t_sgd, rel, rel_default,
              s.data.decomp.size())};
}

const MethodSummary& row(const SimReport& r, SimMethod m) {
  return *std::find_if(r.rows.begin(), r.rows.end(), [&](const MethodSummary& s) { return s.method == m; });
}

// Fork, n = 250, nugget sd 0.1, checkerboard holdout, 20 replicates.
Outcome checkerboard_table() {
  SimScenario sc;
  sc.replicates = 20;
  sc.seed = 707;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = run_scenario(sc, kAllSimMethods);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& mp = row(rep, SimMethod::VisGpMP);
  const auto& eu = row(rep, SimMethod::EuclideanGP);
  bool every_batch = true;
  for (SimMethod m : {SimMethod::VisGpNC, SimMethod::VisGpMP, SimMethod::VisGpPW})
    every_batch = every_batch && row(rep, m).mse < eu.mse;
  int failures = 0;
  for (const auto& r : rep.rows) failures += r.failures;
  const bool mse_ok = mp.mse >= 0.02 && mp.mse <= 0.08;
  const bool eu_ok = eu.mse > 0.5;
  const bool cov_ok = mp.coverage >= 0.85 && mp.coverage <= 0.97;
  std::string detail = fmt(
      "visGP-MP mse=%.4f [0.02,0.08]%s coverage=%.3f [0.85,0.97]%s; EuclideanGP mse=%.4f (>0.5)%s; "
      "NC=%.4f PW=%.4f; visGP beats Euclidean: %s; failures=%d; %.0fs",
      mp.mse, mse_ok ? "" : " OUT", mp.coverage, cov_ok ? "" : " OUT", eu.mse, eu_ok ? "" : " OUT",
      row(rep, SimMethod::VisGpNC).mse, row(rep, SimMethod::VisGpPW).mse, every_batch ? "yes" : "no", failures, secs);
  return {mse_ok && eu_ok && cov_ok && every_batch && failures == 0 && secs <= 1800, detail};
}

// Fork, n = 250, random 20% holdout: intervals are calibrated.
Outcome random_holdout_calibration() {
  SimScenario sc;
  sc.replicates = 20;
  sc.seed = 808;
  sc.holdout = {HoldoutKind::RandomFraction, 0.2};
  const std::vector<SimMethod> methods = {SimMethod::VisGpNC, SimMethod::VisGpMP, SimMethod::VisGpPW};
  const auto rep = run_scenario(sc, methods);
  const auto& mp = row(rep, SimMethod::VisGpMP);
  int failures = 0;
  for (const auto& r : rep.rows) failures += r.failures;
  return {mp.coverage >= 0.90 && mp.coverage <= 0.99 && failures == 0,
          fmt("visGP-MP coverage=%.3f [0.90,0.99] (NC=%.3f PW=%.3f) mse=%.4f failures=%d", mp.coverage,
              row(rep, SimMethod::VisGpNC).coverage, row(rep, SimMethod::VisGpPW).coverage, mp.mse, failures)};
}

// Data and sites inside one convex piece of a non-convex domain: visGP
// kriging equals Euclidean kriging.
Outcome convex_subdomain_equivalence() {
  std::mt19937_64 rng(909);
  const auto fork = make_fork_domain();
  const auto u = make_u_domain();
  struct Case {
    const PolygonDomain* dom;
    PolygonDomain piece;
  };
  const Case cases[] = {{&fork, PolygonDomain({{-5.75, -5}, {-4.25, -5}, {-4.25, 5}, {-5.75, 5}})},
                        {&fork, PolygonDomain({{-5.75, -7}, {1.75, -7}, {1.75, -5}, {-5.75, -5}})},
                        {&u, PolygonDomain({{-6, -6}, {-4, -6}, {-4, 6}, {-6, 6}})}};
  const ModelSpec spec{CovFamily::Matern, 1.5};
  double worst = 0.0;
  int sites = 0;
  for (const auto& c : cases) {
    const int n = 60;
    const auto pts = oracle::random_points(c.piece, n, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = std::cos(pts[i].x) + 0.3 * pts[i].y;
    const Eigen::MatrixXd X = intercept_design(n);
    const auto g = build_visibility_graph(pts, *c.dom);
    const VisibilityGraph full = complete_graph(pts);
    ParamVector p;
    p.beta = Eigen::VectorXd::Constant(1, 0.3);
    p.sigma2 = 1.2;
    p.phi = 0.8;
    p.tau2 = 0.05;
    const auto model = p.covariance(spec);
    const auto test = oracle::random_points(c.piece, 40, rng);
    const Eigen::MatrixXd tx = intercept_design(40);
    const DataView view{y, X, pts};
    // all observations as the neighbor set, against a dense oracle
    const Eigen::MatrixXd S = cov_matrix(pts, model, true);
    for (PredictStrategy strat : {PredictStrategy::NearestClique, PredictStrategy::MaxPrecision}) {
      PredictOptions all{strat, n};
      const auto vis = predict_sites(test, tx, g, c.dom, view, p, spec, all);
      for (int t = 0; t < 40; ++t) {
        const Eigen::VectorXd cs = cross_cov(pts, std::vector<Point2>{test[t]}, model).col(0);
        const auto want = oracle::dense_krige(S, cs, p.sigma2 + p.tau2, y.array() - 0.3, 0.3);
        worst = std::max({worst, std::abs(vis[t].mean - want.mean), std::abs(vis[t].variance - want.variance)});
        ++sites;
      }
      // 10 nearest neighbors, against the Euclidean pipeline
      PredictOptions knn{strat, 10};
      const auto v10 = predict_sites(test, tx, g, c.dom, view, p, spec, knn);
      const auto e10 = predict_sites(test, tx, full, nullptr, view, p, spec, knn);
      for (int t = 0; t < 40; ++t)
        worst = std::max({worst, std::abs(v10[t].mean - e10[t].mean), std::abs(v10[t].variance - e10[t].variance)});
    }
  }
  return {worst < 1e-8, fmt("max |visGP - Euclidean| = %.2e over %d site predictions", worst, sites)};
}

// Nearest-neighbor approximation inside a 100-point clique.
Outcome nngp_fidelity() {
  std::mt19937_64 rng(1010);
  double worst_rel = 0.0, worst_exact = 0.0;
  const ModelSpec specs[] = {{CovFamily::Exponential, 0.5}, {CovFamily::Matern, 1.5}, {CovFamily::Matern, 1.0}};
  for (int trial = 0; trial < 6; ++trial) {
    const auto pts = oracle::random_points(oracle::unit_square(), 100, rng);
    ParamVector p;
    p.beta = Eigen::VectorXd::Constant(1, 0.5);
    p.sigma2 = 1.0;
    p.phi = trial < 3 ? 3.0 : 8.0;
    p.tau2 = 0.05;
    const auto& spec = specs[trial % 3];
    const auto K = cov_matrix(pts, p.covariance(spec), true);
    std::normal_distribution<double> nd;
    Eigen::VectorXd z(100);
    for (auto& v : z) v = nd(rng);
    const Eigen::VectorXd y = (K.llt().matrixL() * z).array() + 0.5;
    const Eigen::MatrixXd X = intercept_design(100);
    const double exact = oracle::dense_logpdf(y, X * p.beta, K);
    worst_rel = std::max(worst_rel, std::abs(clique_loglik_nngp(y, X, pts, p, spec, 15) - exact) / std::abs(exact));
    worst_exact = std::max(worst_exact, std::abs(clique_loglik_nngp(y, X, pts, p, spec, 99) - exact));
  }
  return {worst_rel < 0.02 && worst_exact < 1e-10,
          fmt("m=15 max relative gap %.4f (<0.02); m=99 max gap %.2e (<1e-10); 6 blocks", worst_rel, worst_exact)};
}

}  // namespace

int main() {
  log::set_level(log::Level::Error);
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"AC1 covariance selection correctness", covsel_correctness},
      {"AC2 union-of-convex exactness", union_of_convex_exactness},
      {"AC3 marginal stationarity", marginal_stationarity},
      {"AC4 likelihood identity", likelihood_identity},
      {"AC5 gradient check", gradient_check},
      {"AC6 graph SGD adequacy", sgd_adequacy},
      {"AC7 checkerboard fork table", checkerboard_table},
      {"AC8 random-holdout calibration", random_holdout_calibration},
      {"AC9 convex-subdomain equivalence", convex_subdomain_equivalence},
      {"AC10 within-clique NNGP fidelity", nngp_fidelity},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
