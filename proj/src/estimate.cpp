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

#include "visgp/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "visgp/error.hpp"
#include "visgp/log.hpp"

namespace visgp {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct BlockMatrices {
  Eigen::MatrixXd sigma;  // C + tau2 I
  Eigen::MatrixXd dphi;   // d sigma / d log phi
  Eigen::VectorXd resid;
  Eigen::MatrixXd X;
};

BlockMatrices assemble(const DataView& data, std::span<const int> idx, const ParamVector& p, const ModelSpec& spec,
                       bool want_grad) {
  const CovarianceModel model = p.covariance(spec);
  const auto m = static_cast<Eigen::Index>(idx.size());
  BlockMatrices b;
  b.sigma.resize(m, m);
  if (want_grad) b.dphi = Eigen::MatrixXd::Zero(m, m);
  b.X.resize(m, data.X.cols());
  b.resid.resize(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    b.X.row(a) = data.X.row(idx[a]);
    b.sigma(a, a) = model.sigma2 + model.tau2;
    for (Eigen::Index c = 0; c < a; ++c) {
      const double d = distance(data.points[idx[a]], data.points[idx[c]]);
      b.sigma(a, c) = b.sigma(c, a) = cov_value(model, d);
      if (want_grad) b.dphi(a, c) = b.dphi(c, a) = cov_dlogphi(model, d);
    }
  }
  for (Eigen::Index a = 0; a < m; ++a) b.resid(a) = data.y(idx[a]) - b.X.row(a).dot(p.beta);
  return b;
}

Eigen::LLT<Eigen::MatrixXd> factor_block(const Eigen::MatrixXd& sigma, double scale) {
  auto llt = factor_spd(sigma, scale);
  if (!llt) {
    throw Error(ErrorCode::NumericalFailure,
                "block of size " + std::to_string(sigma.rows()) + " is not positive definite");
  }
  return *std::move(llt);
}

double log_density(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& resid) {
  const Eigen::MatrixXd& l = llt.matrixLLT();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  const Eigen::VectorXd half = llt.matrixL().solve(resid);
  return -0.5 * (static_cast<double>(resid.size()) * kLog2Pi + logdet + half.squaredNorm());
}

// Positions of each point's conditioning set in the x-sorted Vecchia order.
std::vector<std::vector<int>> vecchia_neighbors(std::span<const Point2> pts, const std::vector<int>& order, int m) {
  std::vector<std::vector<int>> nbrs(order.size());
  std::vector<std::pair<double, int>> cand;
  for (std::size_t t = 1; t < order.size(); ++t) {
    cand.clear();
    for (std::size_t u = 0; u < t; ++u) cand.emplace_back(distance(pts[order[t]], pts[order[u]]), static_cast<int>(u));
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(m), cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end());
    for (std::size_t q = 0; q < keep; ++q) nbrs[t].push_back(cand[q].second);
    std::sort(nbrs[t].begin(), nbrs[t].end());
  }
  return nbrs;
}

std::vector<int> x_order(std::span<const Point2> pts, std::span<const int> idx) {
  std::vector<int> order(idx.begin(), idx.end());
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (pts[a].x != pts[b].x) return pts[a].x < pts[b].x;
    return a < b;
  });
  return order;
}

// Vecchia log-density over an index block as a sum of joint-minus-marginal terms.
LogLikGrad nngp_block(const DataView& data, std::span<const int> idx, const ParamVector& p, const ModelSpec& spec,
                      int m, bool want_grad) {
  const std::vector<int> order = x_order(data.points, idx);
  std::vector<Point2> ordered_pts;
  for (int i : order) ordered_pts.push_back(data.points[i]);
  std::vector<int> local(order.size());
  std::iota(local.begin(), local.end(), 0);
  const auto nbrs = vecchia_neighbors(ordered_pts, local, m);

  LogLikGrad out;
  out.grad = Eigen::VectorXd::Zero(p.dim());
  std::vector<int> joint, cond;
  for (std::size_t t = 0; t < order.size(); ++t) {
    cond.clear();
    for (int u : nbrs[t]) cond.push_back(order[u]);
    joint = cond;
    joint.push_back(order[t]);
    if (want_grad) {
      const LogLikGrad a = block_loglik_grad(data, joint, p, spec);
      out.value += a.value;
      out.grad += a.grad;
      if (!cond.empty()) {
        const LogLikGrad b = block_loglik_grad(data, cond, p, spec);
        out.value -= b.value;
        out.grad -= b.grad;
      }
    } else {
      out.value += block_loglik(data, joint, p, spec);
      if (!cond.empty()) out.value -= block_loglik(data, cond, p, spec);
    }
  }
  return out;
}

LogLikGrad eval_set(const RegressionData& data, const std::vector<int>& idx, const ParamVector& p,
                    const LikelihoodOptions& opts, bool want_grad) {
  const DataView view{data.y, data.X, data.points};
  if (idx.empty()) return {0.0, Eigen::VectorXd::Zero(p.dim())};
  if (idx.size() > opts.nngp_threshold) return nngp_block(view, idx, p, opts.model, opts.nngp_neighbors, want_grad);
  if (want_grad) return block_loglik_grad(view, idx, p, opts.model);
  return {block_loglik(view, idx, p, opts.model), Eigen::VectorXd()};
}

LogLikGrad eval_component(const RegressionData& data, std::size_t i, const ParamVector& p,
                          const LikelihoodOptions& opts, bool want_grad) {
  try {
    LogLikGrad k = eval_set(data, data.decomp.cliques[i], p, opts, want_grad);
    const LogLikGrad s = eval_set(data, data.decomp.separators[i], p, opts, want_grad);
    k.value -= s.value;
    if (want_grad) k.grad -= s.grad;
    return k;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NumericalFailure) throw;
    throw Error(ErrorCode::NumericalFailure, "clique " + std::to_string(i) + ": " + e.what());
  }
}

LogLikGrad sum_components(const RegressionData& data, const ParamVector& p, const LikelihoodOptions& opts,
                          bool want_grad) {
  const auto c = static_cast<long>(data.decomp.size());
  std::vector<LogLikGrad> parts(static_cast<std::size_t>(c));
  std::vector<std::string> errors(static_cast<std::size_t>(c));
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < c; ++i) {
    try {
      parts[i] = eval_component(data, static_cast<std::size_t>(i), p, opts, want_grad);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& err : errors) {
    if (!err.empty()) throw Error(ErrorCode::NumericalFailure, err);
  }
  // Fixed-order reduction keeps sums reproducible across thread counts.
  LogLikGrad total;
  total.grad = Eigen::VectorXd::Zero(p.dim());
  for (const auto& part : parts) {
    total.value += part.value;
    if (want_grad) total.grad += part.grad;
  }
  return total;
}

bool params_finite(const ParamVector& p) {
  return p.beta.allFinite() && std::isfinite(p.sigma2) && std::isfinite(p.phi) && std::isfinite(p.tau2) &&
         p.sigma2 > 0 && p.phi > 0 && p.tau2 > 0;
}

}  // namespace

Eigen::VectorXd ParamVector::to_unconstrained() const {
  Eigen::VectorXd z(dim());
  z.head(beta.size()) = beta;
  z(beta.size()) = std::log(sigma2);
  z(beta.size() + 1) = std::log(phi);
  z(beta.size() + 2) = std::log(tau2);
  return z;
}

ParamVector ParamVector::from_unconstrained(const Eigen::VectorXd& z, Eigen::Index p) {
  ParamVector out;
  out.beta = z.head(p);
  out.sigma2 = std::exp(z(p));
  out.phi = std::exp(z(p + 1));
  out.tau2 = std::exp(z(p + 2));
  return out;
}

CovarianceModel ParamVector::covariance(const ModelSpec& spec) const {
  return CovarianceModel{spec.family, sigma2, phi, spec.nu, tau2};
}

void RegressionData::validate() const {
  const Eigen::Index n = y.size();
  if (X.rows() != n || static_cast<Eigen::Index>(points.size()) != n || decomp.n != n) {
    throw Error(ErrorCode::InvalidInput, "inconsistent data dimensions");
  }
  if (X.cols() < 1) throw Error(ErrorCode::InvalidInput, "design matrix needs at least one column");
  if (!y.allFinite() || !X.allFinite()) throw Error(ErrorCode::InvalidInput, "missing or non-finite values");
}

Eigen::MatrixXd intercept_design(Eigen::Index n) { return Eigen::MatrixXd::Ones(n, 1); }

double block_loglik(const DataView& data, std::span<const int> idx, const ParamVector& p, const ModelSpec& spec) {
  if (idx.empty()) return 0.0;
  const BlockMatrices b = assemble(data, idx, p, spec, false);
  return log_density(factor_block(b.sigma, p.sigma2), b.resid);
}

LogLikGrad block_loglik_grad(const DataView& data, std::span<const int> idx, const ParamVector& p,
                             const ModelSpec& spec) {
  LogLikGrad out;
  out.grad = Eigen::VectorXd::Zero(p.dim());
  if (idx.empty()) return out;
  const BlockMatrices b = assemble(data, idx, p, spec, true);
  const auto llt = factor_block(b.sigma, p.sigma2);
  out.value = log_density(llt, b.resid);

  const Eigen::Index m = b.sigma.rows();
  const Eigen::Index q = p.beta.size();
  const Eigen::VectorXd alpha = llt.solve(b.resid);
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m, m));

  // Score for a covariance coordinate with dSigma = D: 0.5 (a'Da - tr(inv D)).
  Eigen::MatrixXd c = b.sigma;
  c.diagonal().array() -= p.tau2;
  out.grad.head(q) = b.X.transpose() * alpha;
  out.grad(q) = 0.5 * (alpha.dot(c * alpha) - (inv.array() * c.array()).sum());
  out.grad(q + 1) = 0.5 * (alpha.dot(b.dphi * alpha) - (inv.array() * b.dphi.array()).sum());
  out.grad(q + 2) = 0.5 * p.tau2 * (alpha.squaredNorm() - inv.trace());
  return out;
}

double clique_loglik_nngp(const Eigen::VectorXd& y_block, const Eigen::MatrixXd& X_block,
                          std::span<const Point2> points_block, const ParamVector& p, const ModelSpec& spec, int m) {
  if (m < 1) throw Error(ErrorCode::InvalidInput, "neighbor count must be at least 1");
  std::vector<int> idx(static_cast<std::size_t>(y_block.size()));
  std::iota(idx.begin(), idx.end(), 0);
  return nngp_block(DataView{y_block, X_block, points_block}, idx, p, spec, m, false).value;
}

LogLikGrad component_loglik_grad(const RegressionData& data, std::size_t i, const ParamVector& p,
                                 const LikelihoodOptions& opts) {
  return eval_component(data, i, p, opts, true);
}

double chordal_loglik(const RegressionData& data, const ParamVector& p, const LikelihoodOptions& opts) {
  return sum_components(data, p, opts, false).value;
}

LogLikGrad chordal_loglik_grad(const RegressionData& data, const ParamVector& p, const LikelihoodOptions& opts) {
  return sum_components(data, p, opts, true);
}

std::string to_string(FitMethod m) { return m == FitMethod::FullMLE ? "full" : "sgd"; }

FitResult fit_full(const RegressionData& data, const ParamVector& init, const LikelihoodOptions& opts,
                   FullFitOptions fit_opts) {
  data.validate();
  const Eigen::Index q = init.beta.size();
  const Eigen::Index dim = init.dim();
  // Largest move per coordinate in one line-search trial, in log units for
  // the covariance parameters.
  constexpr double kMaxStep = 3.0;

  FitResult res;
  res.method = FitMethod::FullMLE;
  Eigen::VectorXd z = init.to_unconstrained();
  LogLikGrad cur = chordal_loglik_grad(data, init, opts);
  if (!std::isfinite(cur.value)) throw Error(ErrorCode::NumericalFailure, "log-likelihood not finite at init");
  res.trace.push_back({0, -1, cur.value});

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim, dim);
  bool scaled = false;
  for (int it = 1; it <= fit_opts.max_iter; ++it) {
    const Eigen::VectorXd g = -cur.grad;  // minimize the negative log-likelihood
    res.grad_norm = g.norm();
    if (res.grad_norm < fit_opts.gtol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = -H * g;
    if (g.dot(dir) >= 0) {
      H.setIdentity();
      dir = -g;
    }
    if (const double big = dir.cwiseAbs().maxCoeff(); big > kMaxStep) dir *= kMaxStep / big;

    const double slope = g.dot(dir);
    double t = 1.0;
    bool accepted = false;
    LogLikGrad next;
    Eigen::VectorXd z_next;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      z_next = z + t * dir;
      const ParamVector cand = ParamVector::from_unconstrained(z_next, q);
      if (!params_finite(cand)) continue;
      try {
        next = chordal_loglik_grad(data, cand, opts);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NumericalFailure) throw;
        continue;
      }
      if (std::isfinite(next.value) && next.grad.allFinite() && -next.value <= -cur.value + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
    }
    res.iterations = it;
    if (!accepted) {
      log::info("fit_full_stall", "iteration=" + std::to_string(it) + " grad_norm=" + std::to_string(res.grad_norm));
      break;
    }

    const Eigen::VectorXd s = z_next - z;
    const Eigen::VectorXd yv = cur.grad - next.grad;  // gradient change of the negative log-likelihood
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (!scaled) {
        H *= sy / yv.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
    }
    const double gain = next.value - cur.value;
    z = z_next;
    cur = next;
    res.trace.push_back({it, -1, cur.value});
    if (gain <= fit_opts.ftol * std::max(1.0, std::abs(cur.value))) {
      res.converged = true;
      break;
    }
  }
  res.params = ParamVector::from_unconstrained(z, q);
  res.loglik = cur.value;
  res.grad_norm = cur.grad.norm();
  if (res.grad_norm < fit_opts.gtol) res.converged = true;
  return res;
}

void SgdConfig::validate() const {
  if (!(alpha > 0) || !(decay > 0 && decay < 1) || !(epsilon > 0) || epochs < 0) {
    throw Error(ErrorCode::InvalidParam, "SGD config requires alpha > 0, 0 < decay < 1, epsilon > 0, epochs >= 0");
  }
}

FitResult fit_sgd(const RegressionData& data, const ParamVector& init, const SgdConfig& cfg,
                  const LikelihoodOptions& opts) {
  data.validate();
  cfg.validate();
  const std::size_t c = data.decomp.size();
  if (c == 0) throw Error(ErrorCode::InvalidInput, "decomposition has no cliques");
  const int epochs = cfg.epochs > 0 ? cfg.epochs : static_cast<int>((5000 + c - 1) / c);
  const Eigen::Index q = init.beta.size();

  FitResult res;
  res.method = FitMethod::GraphSGD;
  Eigen::VectorXd theta = init.to_unconstrained();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> perm(c);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  for (int t = 1; t <= epochs; ++t) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i : perm) {
      const ParamVector cur = ParamVector::from_unconstrained(theta, q);
      const LogLikGrad g = component_loglik_grad(data, i, cur, opts);
      if (!g.grad.allFinite()) {
        throw Error(ErrorCode::NumericalFailure, "clique " + std::to_string(i) + ": non-finite gradient");
      }
      v = cfg.decay * v + (1.0 - cfg.decay) * g.grad.cwiseProduct(g.grad);
      theta.array() += cfg.alpha * g.grad.array() / (v.array() + cfg.epsilon).sqrt();
      res.trace.push_back({t, static_cast<int>(i), g.value});
    }
  }
  res.iterations = epochs;
  res.params = ParamVector::from_unconstrained(theta, q);
  const LogLikGrad fin = chordal_loglik_grad(data, res.params, opts);
  res.loglik = fin.value;
  res.grad_norm = fin.grad.norm();
  res.converged = std::isfinite(res.loglik);
  return res;
}

ParamVector initial_params(const RegressionData& data, double domain_diameter) {
  data.validate();
  ParamVector p;
  p.beta = data.X.colPivHouseholderQr().solve(data.y);
  const Eigen::VectorXd r = data.y - data.X * p.beta;
  const double dof = std::max<double>(1.0, static_cast<double>(data.n() - data.X.cols()));
  double var = r.squaredNorm() / dof;
  if (!(var > 0)) var = 1e-6;
  p.sigma2 = var / 2.0;
  p.tau2 = var / 2.0;
  p.phi = 3.0 / domain_diameter;
  return p;
}

}  // namespace visgp
