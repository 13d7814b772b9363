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

#include "visgp/predict.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "visgp/error.hpp"

namespace visgp {
namespace {

// Sigma = C + tau2 * delta, where delta is 1 for coincident locations.
double sigma_value(const CovarianceModel& m, Point2 a, Point2 b) {
  return cov_value(m, distance(a, b)) + (a == b ? m.tau2 : 0.0);
}

struct Conditional {
  Eigen::VectorXd weights;  // Sigma(N,N)^-1 Sigma(N,s)
  double variance = 0.0;
};

Conditional condition_on(Point2 s, std::span<const int> N, std::span<const Point2> pts, const CovarianceModel& m) {
  const auto q = static_cast<Eigen::Index>(N.size());
  Eigen::MatrixXd snn(q, q);
  Eigen::VectorXd sns(q);
  for (Eigen::Index a = 0; a < q; ++a) {
    sns(a) = sigma_value(m, pts[N[a]], s);
    snn(a, a) = m.sigma2 + m.tau2;
    for (Eigen::Index b = 0; b < a; ++b) snn(a, b) = snn(b, a) = sigma_value(m, pts[N[a]], pts[N[b]]);
  }
  const auto llt = factor_spd(snn, m.sigma2 + m.tau2);
  if (!llt) throw Error(ErrorCode::NumericalFailure, "neighbor covariance is not positive definite");
  Conditional c;
  c.weights = llt->solve(sns);
  c.variance = std::max(0.0, m.sigma2 + m.tau2 - sns.dot(c.weights));
  return c;
}

void require_inside(Point2 s, const PolygonDomain* dom) {
  if (dom && !point_in_domain(s, *dom)) {
    throw Error(ErrorCode::InvalidInput,
                "prediction site (" + std::to_string(s.x) + ", " + std::to_string(s.y) + ") is outside the domain");
  }
}

[[noreturn]] void no_neighbors(Point2 s) {
  throw Error(ErrorCode::NoVisibleNeighbors,
              "no observation visible from (" + std::to_string(s.x) + ", " + std::to_string(s.y) + ")");
}

void fill_interval(Prediction& out, double level) {
  const double half = interval_z(level) * std::sqrt(out.variance);
  out.lower = out.mean - half;
  out.upper = out.mean + half;
}

}  // namespace

std::string to_string(PredictStrategy s) {
  switch (s) {
    case PredictStrategy::NearestClique: return "nc";
    case PredictStrategy::MaxPrecision: return "mp";
    case PredictStrategy::PrecisionWeighted: return "pw";
  }
  return "?";
}

PredictStrategy parse_strategy(const std::string& name) {
  if (name == "nc" || name == "nearest_clique") return PredictStrategy::NearestClique;
  if (name == "mp" || name == "max_precision") return PredictStrategy::MaxPrecision;
  if (name == "pw" || name == "precision_weighted") return PredictStrategy::PrecisionWeighted;
  throw Error(ErrorCode::InvalidInput, "unknown prediction strategy '" + name + "'");
}

std::string to_string(PredictStatus s) {
  switch (s) {
    case PredictStatus::Ok: return "ok";
    case PredictStatus::NoNeighbors: return "no_neighbors";
    case PredictStatus::PriorFallback: return "prior_fallback";
  }
  return "?";
}

double interval_z(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidParam, "interval level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 * (1.0 + level));
}

std::vector<int> visible_candidates(Point2 s, std::span<const Point2> points, const PolygonDomain* dom, int limit,
                                    std::optional<double> d_max) {
  require_inside(s, dom);
  std::vector<std::pair<double, int>> order;
  order.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) order.emplace_back(distance(s, points[i]), static_cast<int>(i));
  std::sort(order.begin(), order.end());
  std::vector<int> out;
  for (const auto& [d, i] : order) {
    if (limit > 0 && static_cast<int>(out.size()) >= limit) break;
    if (d_max && d > *d_max) break;
    if (dom && !segment_in_domain(s, points[i], *dom)) continue;
    out.push_back(i);
  }
  return out;
}

NeighborSet neighbors_nearest_clique(Point2 s, const VisibilityGraph& g, const PolygonDomain* dom, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidParam, "k must be at least 1");
  require_inside(s, dom);
  std::vector<std::pair<double, int>> order;
  for (std::size_t i = 0; i < g.points.size(); ++i) order.emplace_back(distance(s, g.points[i]), static_cast<int>(i));
  std::sort(order.begin(), order.end());

  NeighborSet ns{s, {}, PredictStrategy::NearestClique, k};
  for (const auto& [d, i] : order) {
    if (g.d_max && d > *g.d_max) break;
    if (dom && !segment_in_domain(s, g.points[i], *dom)) continue;
    const bool joins = std::all_of(ns.indices.begin(), ns.indices.end(), [&](int j) { return g.adjacent(i, j); });
    if (!joins) break;
    ns.indices.push_back(i);
    if (static_cast<int>(ns.indices.size()) == k) break;
  }
  if (ns.indices.empty()) no_neighbors(s);
  return ns;
}

NeighborSet neighbors_max_precision(Point2 s, const VisibilityGraph& g, const PolygonDomain* dom, int k,
                                    const CovarianceModel& model) {
  if (k < 1) throw Error(ErrorCode::InvalidParam, "k must be at least 1");
  const std::vector<int> cand = visible_candidates(s, g.points, dom, k, g.d_max);
  if (cand.empty()) no_neighbors(s);
  NeighborSet ns{s, {}, PredictStrategy::MaxPrecision, k};
  double best = std::numeric_limits<double>::infinity();
  for (const auto& clique : maximal_cliques(g.adjacency, cand)) {
    const double v = condition_on(s, clique, g.points, model).variance;
    if (v < best) {
      best = v;
      ns.indices = clique;
    }
  }
  return ns;
}

Prediction predict_at(Point2 s, const Eigen::VectorXd& x_s, std::span<const int> N, const DataView& data,
                      const ParamVector& p, const ModelSpec& spec, double level) {
  if (N.empty()) no_neighbors(s);
  if (x_s.size() != p.beta.size()) throw Error(ErrorCode::InvalidInput, "site covariates do not match beta");
  const Conditional c = condition_on(s, N, data.points, p.covariance(spec));
  Prediction out;
  out.mean = x_s.dot(p.beta);
  for (std::size_t a = 0; a < N.size(); ++a) {
    out.mean += c.weights(static_cast<Eigen::Index>(a)) * (data.y(N[a]) - data.X.row(N[a]).dot(p.beta));
  }
  out.variance = c.variance;
  out.neighbor_count = static_cast<int>(N.size());
  fill_interval(out, level);
  return out;
}

Prediction predict_precision_weighted(Point2 s, const Eigen::VectorXd& x_s, const VisibilityGraph& g,
                                      const PolygonDomain* dom, int k, const DataView& data, const ParamVector& p,
                                      const ModelSpec& spec, double level) {
  if (k < 1) throw Error(ErrorCode::InvalidParam, "k must be at least 1");
  std::vector<int> remaining = visible_candidates(s, g.points, dom, k, g.d_max);
  if (remaining.empty()) no_neighbors(s);

  std::vector<Prediction> parts;
  int used = 0;
  while (!remaining.empty()) {
    const auto cliques = maximal_cliques(g.adjacency, remaining);
    const auto largest = std::max_element(cliques.begin(), cliques.end(),
                                          [](const auto& a, const auto& b) { return a.size() < b.size(); });
    parts.push_back(predict_at(s, x_s, *largest, data, p, spec, level));
    used += static_cast<int>(largest->size());
    std::erase_if(remaining, [&](int v) { return std::find(largest->begin(), largest->end(), v) != largest->end(); });
  }

  Prediction out;
  out.neighbor_count = used;
  out.strategy = PredictStrategy::PrecisionWeighted;
  // An exact interpolating clique has infinite precision and wins outright.
  for (const auto& part : parts) {
    if (part.variance <= 0.0) {
      out.mean = part.mean;
      out.variance = 0.0;
      fill_interval(out, level);
      return out;
    }
  }
  double total = 0.0;
  double weighted = 0.0;
  for (const auto& part : parts) {
    total += 1.0 / part.variance;
    weighted += part.mean / part.variance;
  }
  out.mean = weighted / total;
  out.variance = 1.0 / total;
  fill_interval(out, level);
  return out;
}

double marginal_variance_at(Point2 s, const VisibilityGraph& g, const PolygonDomain* dom, const Eigen::MatrixXd& L,
                            const CovarianceModel& model, int k) {
  const NeighborSet ns = neighbors_nearest_clique(s, g, dom, k);
  const auto q = static_cast<Eigen::Index>(ns.indices.size());
  const Conditional c = condition_on(s, ns.indices, g.points, model);
  Eigen::MatrixXd lnn(q, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    for (Eigen::Index b = 0; b < q; ++b) lnn(a, b) = L(ns.indices[a], ns.indices[b]);
  }
  // B(s) = Sigma(s,N) Sigma(N,N)^-1 = weights', F(s) = conditional variance.
  return c.weights.dot(lnn * c.weights) + c.variance;
}

void PredictOptions::validate() const {
  if (k < 1) throw Error(ErrorCode::InvalidParam, "k must be at least 1");
  interval_z(level);
}

std::vector<Prediction> predict_sites(std::span<const Point2> sites, const Eigen::MatrixXd& site_X,
                                      const VisibilityGraph& g, const PolygonDomain* dom, const DataView& data,
                                      const ParamVector& p, const ModelSpec& spec, const PredictOptions& opts) {
  opts.validate();
  if (site_X.rows() != static_cast<Eigen::Index>(sites.size()) || site_X.cols() != data.X.cols()) {
    throw Error(ErrorCode::InvalidInput, "site covariates have the wrong shape");
  }
  for (Point2 s : sites) require_inside(s, dom);

  const CovarianceModel model = p.covariance(spec);
  const auto m = static_cast<long>(sites.size());
  std::vector<Prediction> out(sites.size());
  std::vector<std::string> errors(sites.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < m; ++i) {
    const Point2 s = sites[i];
    const Eigen::VectorXd x_s = site_X.row(i).transpose();
    try {
      switch (opts.strategy) {
        case PredictStrategy::NearestClique:
          out[i] = predict_at(s, x_s, neighbors_nearest_clique(s, g, dom, opts.k).indices, data, p, spec, opts.level);
          break;
        case PredictStrategy::MaxPrecision:
          out[i] = predict_at(s, x_s, neighbors_max_precision(s, g, dom, opts.k, model).indices, data, p, spec,
                              opts.level);
          break;
        case PredictStrategy::PrecisionWeighted:
          out[i] = predict_precision_weighted(s, x_s, g, dom, opts.k, data, p, spec, opts.level);
          break;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoVisibleNeighbors) {
        errors[i] = e.what();
        continue;
      }
      Prediction& r = out[i];
      if (opts.prior_fallback) {
        r.mean = x_s.dot(p.beta);
        r.variance = model.sigma2 + model.tau2;
        fill_interval(r, opts.level);
        r.status = PredictStatus::PriorFallback;
      } else {
        r.mean = r.variance = r.lower = r.upper = std::numeric_limits<double>::quiet_NaN();
        r.status = PredictStatus::NoNeighbors;
      }
    }
    out[i].strategy = opts.strategy;
  }
  for (const auto& err : errors) {
    if (!err.empty()) throw Error(ErrorCode::NumericalFailure, err);
  }
  return out;
}

}  // namespace visgp
