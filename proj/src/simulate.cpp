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

#include "visgp/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "visgp/error.hpp"
#include "visgp/log.hpp"
#include "visgp/visgraph.hpp"

namespace visgp {
namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kPoolStream = 0x706f6f6c;
constexpr std::uint64_t kTileStream = 0x74696c65;
constexpr std::uint64_t kReplicateStream = 0x72657073;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Scores {
  double mse = 0.0;
  double coverage = 0.0;
  double ci_length = 0.0;
};

Scores score(const std::vector<Prediction>& preds, const Eigen::VectorXd& y) {
  Scores s;
  const double m = static_cast<double>(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double yi = y(static_cast<Eigen::Index>(i));
    s.mse += (preds[i].mean - yi) * (preds[i].mean - yi) / m;
    s.coverage += (preds[i].lower <= yi && yi <= preds[i].upper) ? 1.0 / m : 0.0;
    s.ci_length += (preds[i].upper - preds[i].lower) / m;
  }
  return s;
}

}  // namespace

PolygonDomain make_fork_domain() {
  Ring outer = {{-5.75, -7}, {1.75, -7}, {1.75, 5}};
  // Walk back along the top, dropping into each gap between prongs.
  for (double gap : {0.0, -2.0, -4.0}) {
    outer.push_back({gap + 0.25, 5});
    outer.push_back({gap + 0.25, -5});
    outer.push_back({gap - 0.25, -5});
    outer.push_back({gap - 0.25, 5});
  }
  outer.push_back({-5.75, 5});
  return PolygonDomain(std::move(outer));
}

PolygonDomain make_u_domain() {
  return PolygonDomain({{-6, -6}, {-4, -6}, {-4, -2}, {4, -2}, {4, -6}, {6, -6}, {6, 6}, {-6, 6}});
}

PolygonDomain make_figure_eight() {
  return PolygonDomain({{-1, -1}, {0, -1}, {0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}, {-1, 0}});
}

PolygonDomain make_three_lobe_chain() {
  return PolygonDomain(
      {{-1, -1}, {0, -1}, {0, 0}, {1, 0}, {1, -1}, {2, -1}, {2, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}, {-1, 0}});
}

double fork_truth_raw(Point2 s, const PolygonDomain& dom) {
  double d[4];
  for (int i = 0; i < 4; ++i) d[i] = geodesic_distance(kForkSources[i], s, dom);
  return d[0] * d[0] / 3.0 + 3.0 * std::sin(d[2]) - d[1] * d[3];
}

double u_truth_raw(Point2 s, const PolygonDomain& dom, Point2 center) {
  const double g = geodesic_distance(center, s, dom);
  return g * g * g + std::sin(3.0 * g);
}

std::vector<double> standardize(std::span<const double> v) {
  if (v.size() < 2) throw Error(ErrorCode::InvalidInput, "need at least two values to standardize");
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0)) throw Error(ErrorCode::InvalidInput, "cannot standardize a constant response");
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [&](double x) { return (x - mean) / sd; });
  return out;
}

std::string to_string(ScenarioDomain d) {
  switch (d) {
    case ScenarioDomain::Fork: return "fork";
    case ScenarioDomain::UShape: return "u";
    case ScenarioDomain::FigureEight: return "figure8";
    case ScenarioDomain::Custom: return "custom";
  }
  return "?";
}

ScenarioDomain parse_scenario_domain(const std::string& name) {
  if (name == "fork") return ScenarioDomain::Fork;
  if (name == "u" || name == "ushape" || name == "u-shape") return ScenarioDomain::UShape;
  if (name == "figure8" || name == "figure-eight") return ScenarioDomain::FigureEight;
  if (name == "custom") return ScenarioDomain::Custom;
  throw Error(ErrorCode::InvalidInput, "unknown scenario domain '" + name + "'");
}

void SimScenario::validate() const {
  if (n < 20) throw Error(ErrorCode::InvalidInput, "scenario needs n >= 20");
  if (replicates < 1) throw Error(ErrorCode::InvalidInput, "scenario needs at least one replicate");
  if (pool_size < n) throw Error(ErrorCode::InvalidInput, "pool smaller than the sample size");
  if (!(nugget_sd >= 0)) throw Error(ErrorCode::InvalidInput, "nugget sd must be non-negative");
  if (k < 1) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
  if (holdout.kind == HoldoutKind::RandomFraction && !(holdout.fraction > 0 && holdout.fraction < 1)) {
    throw Error(ErrorCode::InvalidInput, "holdout fraction must lie in (0, 1)");
  }
  if (domain == ScenarioDomain::Custom && !custom) throw Error(ErrorCode::InvalidInput, "custom scenario needs a domain");
  if (fit == FitMethod::GraphSGD) sgd.validate();
}

PolygonDomain SimScenario::resolve_domain() const {
  switch (domain) {
    case ScenarioDomain::Fork: return make_fork_domain();
    case ScenarioDomain::UShape: return make_u_domain();
    case ScenarioDomain::FigureEight: return make_figure_eight();
    case ScenarioDomain::Custom:
      if (!custom) throw Error(ErrorCode::InvalidInput, "custom scenario needs a domain");
      return *custom;
  }
  throw Error(ErrorCode::InvalidInput, "unknown scenario domain");
}

ScenarioPool make_pool(const SimScenario& sc, const PolygonDomain& dom) {
  log::StageTimer timer("pool");
  ScenarioPool pool;
  auto rng = stream(sc.seed, kPoolStream);
  std::uniform_real_distribution<double> ux(dom.min_corner().x, dom.max_corner().x);
  std::uniform_real_distribution<double> uy(dom.min_corner().y, dom.max_corner().y);
  while (static_cast<int>(pool.points.size()) < sc.pool_size) {
    const Point2 p{ux(rng), uy(rng)};
    if (point_in_domain(p, dom)) pool.points.push_back(p);
  }

  const auto m = static_cast<long>(pool.points.size());
  std::vector<double> raw(pool.points.size());
  if (sc.domain == ScenarioDomain::Fork) {
    std::vector<GeodesicField> fields;
    for (Point2 src : kForkSources) fields.emplace_back(src, dom);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < m; ++i) {
      double d[4];
      for (int j = 0; j < 4; ++j) d[j] = fields[j].distance_to(pool.points[i]);
      raw[i] = d[0] * d[0] / 3.0 + 3.0 * std::sin(d[2]) - d[1] * d[3];
    }
  } else {
    Point2 center = kUCenter;
    if (sc.domain == ScenarioDomain::FigureEight) center = {-0.5, -0.5};
    if (sc.domain == ScenarioDomain::Custom) center = sc.custom_center;
    const GeodesicField field(center, dom);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < m; ++i) {
      const double g = field.distance_to(pool.points[i]);
      raw[i] = g * g * g + std::sin(3.0 * g);
    }
  }
  pool.truth = standardize(raw);
  return pool;
}

std::vector<bool> checkerboard_mask(std::span<const Point2> points, const PolygonDomain& dom, std::uint64_t seed) {
  const double side = dom.diameter() / 10.0;
  auto rng = stream(seed, kTileStream);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double ox = dom.min_corner().x - side * u(rng);
  const double oy = dom.min_corner().y - side * u(rng);
  std::vector<bool> mask(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto ti = static_cast<long>(std::floor((points[i].x - ox) / side));
    const auto tj = static_cast<long>(std::floor((points[i].y - oy) / side));
    mask[i] = ((ti + 2 * tj) % 5 + 5) % 5 == 0;
  }
  return mask;
}

std::vector<bool> random_mask(std::size_t n, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rng = stream(seed, kTileStream, 1);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < n_test; ++i) mask[idx[i]] = true;
  return mask;
}

std::string to_string(SimMethod m) {
  switch (m) {
    case SimMethod::VisGpNC: return "visGP-NC";
    case SimMethod::VisGpMP: return "visGP-MP";
    case SimMethod::VisGpPW: return "visGP-PW";
    case SimMethod::EuclideanGP: return "EuclideanGP";
  }
  return "?";
}

SimMethod parse_sim_method(const std::string& name) {
  for (SimMethod m : kAllSimMethods) {
    if (name == to_string(m)) return m;
  }
  if (name == "nc") return SimMethod::VisGpNC;
  if (name == "mp") return SimMethod::VisGpMP;
  if (name == "pw") return SimMethod::VisGpPW;
  if (name == "euclidean") return SimMethod::EuclideanGP;
  throw Error(ErrorCode::InvalidInput, "unknown method '" + name + "'");
}

std::vector<ReplicateResult> run_replicate(const SimScenario& sc, const PolygonDomain& dom, const ScenarioPool& pool,
                                           int replicate, std::span<const SimMethod> methods) {
  std::vector<ReplicateResult> rows;
  for (SimMethod m : methods) {
    ReplicateResult r;
    r.replicate = replicate;
    r.method = m;
    rows.push_back(r);
  }
  auto fail_all = [&](const std::string& why) {
    for (auto& r : rows) r.ok = false, r.error = why;
    return rows;
  };

  auto rng = stream(sc.seed, kReplicateStream, static_cast<std::uint64_t>(replicate));
  std::vector<std::size_t> pick(pool.points.size());
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  for (int i = 0; i < sc.n; ++i) {
    std::uniform_int_distribution<std::size_t> u(static_cast<std::size_t>(i), pick.size() - 1);
    std::swap(pick[static_cast<std::size_t>(i)], pick[u(rng)]);
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Point2> pts(static_cast<std::size_t>(sc.n));
  Eigen::VectorXd y(sc.n);
  for (int i = 0; i < sc.n; ++i) {
    pts[i] = pool.points[pick[i]];
    y(i) = pool.truth[pick[i]] + sc.nugget_sd * noise(rng);
  }

  const std::vector<bool> test = sc.holdout.kind == HoldoutKind::Checkerboard
                                     ? checkerboard_mask(pts, dom, sc.seed)
                                     : random_mask(pts.size(), sc.holdout.fraction, rng());
  std::vector<Point2> train_pts, test_pts;
  std::vector<double> train_y, test_y;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    (test[i] ? test_pts : train_pts).push_back(pts[i]);
    (test[i] ? test_y : train_y).push_back(y(static_cast<Eigen::Index>(i)));
  }
  if (test_pts.empty() || train_pts.size() < 5) return fail_all("degenerate train/test split");
  for (auto& r : rows) r.n_train = static_cast<int>(train_pts.size()), r.n_test = static_cast<int>(test_pts.size());

  RegressionData data;
  data.y = Eigen::Map<const Eigen::VectorXd>(train_y.data(), static_cast<Eigen::Index>(train_y.size()));
  data.X = intercept_design(data.n());
  data.points = train_pts;
  const Eigen::VectorXd ytest =
      Eigen::Map<const Eigen::VectorXd>(test_y.data(), static_cast<Eigen::Index>(test_y.size()));
  const Eigen::MatrixXd site_X = intercept_design(ytest.size());
  LikelihoodOptions lopts;
  lopts.model = sc.model;

  auto fit = [&](const RegressionData& d) {
    const ParamVector init = initial_params(d, dom.diameter());
    if (sc.fit == FitMethod::GraphSGD) return fit_sgd(d, init, sc.sgd, lopts);
    return fit_full(d, init, lopts);
  };

  const bool any_visgp = std::any_of(methods.begin(), methods.end(), [](SimMethod m) { return m != SimMethod::EuclideanGP; });
  std::optional<VisibilityGraph> graph;
  FitResult vis_fit;
  double shared_seconds = 0.0;
  std::string shared_error;
  if (any_visgp) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      graph = build_visibility_graph(train_pts, dom);
      data.decomp = decompose(graph->adjacency);
      vis_fit = fit(data);
    } catch (const std::exception& e) {
      shared_error = e.what();
    }
    shared_seconds = seconds_since(t0);
  }

  for (auto& r : rows) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      PredictOptions popts;
      popts.k = sc.k;
      popts.prior_fallback = true;
      std::vector<Prediction> preds;
      if (r.method == SimMethod::EuclideanGP) {
        const VisibilityGraph full = complete_graph(train_pts);
        RegressionData euc = data;
        euc.decomp = decompose(full.adjacency);
        const FitResult f = fit(euc);
        preds = predict_sites(test_pts, site_X, full, nullptr, DataView{euc.y, euc.X, euc.points}, f.params,
                              sc.model, popts);
      } else {
        if (!shared_error.empty()) throw Error(ErrorCode::NumericalFailure, shared_error);
        popts.strategy = r.method == SimMethod::VisGpNC   ? PredictStrategy::NearestClique
                         : r.method == SimMethod::VisGpMP ? PredictStrategy::MaxPrecision
                                                          : PredictStrategy::PrecisionWeighted;
        preds = predict_sites(test_pts, site_X, *graph, &dom, DataView{data.y, data.X, data.points}, vis_fit.params,
                              sc.model, popts);
      }
      const Scores s = score(preds, ytest);
      r.mse = s.mse;
      r.coverage = s.coverage;
      r.ci_length = s.ci_length;
      r.ok = std::isfinite(s.mse);
      if (!r.ok) r.error = "non-finite predictions";
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
    r.wall_seconds = seconds_since(t0) + (r.method == SimMethod::EuclideanGP ? 0.0 : shared_seconds);
  }
  return rows;
}

SimReport run_scenario(const SimScenario& sc, std::span<const SimMethod> methods) {
  sc.validate();
  if (methods.empty()) throw Error(ErrorCode::InvalidInput, "no methods requested");
  const PolygonDomain dom = sc.resolve_domain();
  const ScenarioPool pool = make_pool(sc, dom);

  std::vector<std::vector<ReplicateResult>> per_rep(static_cast<std::size_t>(sc.replicates));
  log::StageTimer timer("replicates");
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < sc.replicates; ++r) per_rep[r] = run_replicate(sc, dom, pool, r, methods);

  SimReport report;
  for (SimMethod m : methods) {
    MethodSummary s;
    s.method = m;
    report.rows.push_back(s);
  }
  for (const auto& rows : per_rep) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const auto& r = rows[j];
      report.replicates.push_back(r);
      auto& s = report.rows[j];
      if (!r.ok) {
        ++s.failures;
        log::warn("replicate_failed", "replicate=" + std::to_string(r.replicate) + " method=" + to_string(r.method) +
                                          " error=\"" + r.error + "\"");
        continue;
      }
      ++s.replicates_ok;
      s.mse += r.mse;
      s.coverage += r.coverage;
      s.ci_length += r.ci_length;
      s.wall_seconds += r.wall_seconds;
    }
  }
  for (auto& s : report.rows) {
    if (s.replicates_ok == 0) {
      s.mse = s.coverage = s.ci_length = s.wall_seconds = std::nan("");
      continue;
    }
    const double k = s.replicates_ok;
    s.mse /= k;
    s.coverage /= k;
    s.ci_length /= k;
    s.wall_seconds /= k;
  }
  return report;
}

}  // namespace visgp
