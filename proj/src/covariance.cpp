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

#include "visgp/covariance.hpp"

#include <cmath>
#include <string>

#include "visgp/error.hpp"
#include "visgp/log.hpp"

namespace visgp {
namespace {

// Below this scaled distance the Matern correlation is 1 to double precision.
constexpr double kTinyArg = 1e-12;

bool is_half_integer(double nu, double target) { return std::abs(nu - target) < 1e-14; }

// Closed-form Matern correlation for nu in {0.5, 1.5, 2.5}; nullopt otherwise.
std::optional<double> matern_closed_form(double nu, double x) {
  if (is_half_integer(nu, 0.5)) return std::exp(-x);
  if (is_half_integer(nu, 1.5)) return (1.0 + x) * std::exp(-x);
  if (is_half_integer(nu, 2.5)) return (1.0 + x + x * x / 3.0) * std::exp(-x);
  return std::nullopt;
}

// x * d/dx of the Matern correlation: -2^(1-nu)/Gamma(nu) x^(nu+1) K_{nu-1}(x).
double matern_x_dcorr(double nu, double x) {
  if (x < kTinyArg) return 0.0;
  if (is_half_integer(nu, 0.5)) return -x * std::exp(-x);
  if (is_half_integer(nu, 1.5)) return -x * x * std::exp(-x);
  if (is_half_integer(nu, 2.5)) return -x * x * (1.0 + x) * std::exp(-x) / 3.0;
  if (x > 700.0) return 0.0;
  const double log_scale = (1.0 - nu) * std::log(2.0) - std::lgamma(nu);
  return -std::exp(log_scale + (nu + 1.0) * std::log(x)) * std::cyl_bessel_k(std::abs(nu - 1.0), x);
}

}  // namespace

std::string to_string(CovFamily family) {
  return family == CovFamily::Exponential ? "exponential" : "matern";
}

CovFamily parse_family(const std::string& name) {
  if (name == "exponential" || name == "Exponential") return CovFamily::Exponential;
  if (name == "matern" || name == "Matern") return CovFamily::Matern;
  throw Error(ErrorCode::InvalidParam, "unknown covariance family '" + name + "'");
}

void CovarianceModel::validate() const {
  const bool ok = std::isfinite(sigma2) && sigma2 > 0 && std::isfinite(phi) && phi > 0 && std::isfinite(nu) &&
                  nu > 0 && std::isfinite(tau2) && tau2 >= 0;
  if (!ok) throw Error(ErrorCode::InvalidParam, "covariance parameters out of range");
}

double matern_correlation_bessel(double nu, double x) {
  if (x < kTinyArg) return 1.0;
  if (x > 700.0) return 0.0;
  const double log_scale = (1.0 - nu) * std::log(2.0) - std::lgamma(nu);
  return std::exp(log_scale + nu * std::log(x)) * std::cyl_bessel_k(nu, x);
}

double cov_value(const CovarianceModel& model, double d) {
  model.validate();
  if (d < 0 || !std::isfinite(d)) throw Error(ErrorCode::InvalidInput, "distance must be finite and non-negative");
  const double x = model.phi * d;
  if (model.family == CovFamily::Exponential) return model.sigma2 * std::exp(-x);
  if (x < kTinyArg) return model.sigma2;
  if (auto c = matern_closed_form(model.nu, x)) return model.sigma2 * *c;
  return model.sigma2 * matern_correlation_bessel(model.nu, x);
}

double cov_dlogphi(const CovarianceModel& model, double d) {
  const double x = model.phi * d;
  if (model.family == CovFamily::Exponential) return -model.sigma2 * x * std::exp(-x);
  return model.sigma2 * matern_x_dcorr(model.nu, x);
}

Eigen::MatrixXd cov_matrix(std::span<const Point2> points, const CovarianceModel& model, bool include_nugget) {
  model.validate();
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = model.sigma2 + (include_nugget ? model.tau2 : 0.0);
    for (Eigen::Index j = 0; j < i; ++j) {
      m(i, j) = m(j, i) = cov_value(model, distance(points[i], points[j]));
    }
  }
  return m;
}

Eigen::MatrixXd cross_cov(std::span<const Point2> a, std::span<const Point2> b, const CovarianceModel& model) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = cov_value(model, distance(a[i], b[j]));
  }
  return m;
}

std::optional<Eigen::LLT<Eigen::MatrixXd>> factor_spd(const Eigen::MatrixXd& m, double jitter_scale) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * jitter_scale;
  log::warn("jitter", "n=" + std::to_string(m.rows()) + " amount=" + std::to_string(jitter));
  Eigen::MatrixXd j = m;
  j.diagonal().array() += jitter;
  llt.compute(j);
  if (llt.info() == Eigen::Success) return llt;
  return std::nullopt;
}

void to_json(nlohmann::json& j, const CovarianceModel& m) {
  j = nlohmann::json{{"family", to_string(m.family)}, {"sigma2", m.sigma2}, {"phi", m.phi}, {"nu", m.nu},
                     {"tau2", m.tau2}};
}

void from_json(const nlohmann::json& j, CovarianceModel& m) {
  m.family = parse_family(j.at("family").get<std::string>());
  m.sigma2 = j.at("sigma2").get<double>();
  m.phi = j.at("phi").get<double>();
  m.nu = j.value("nu", m.family == CovFamily::Exponential ? 0.5 : m.nu);
  m.tau2 = j.value("tau2", 0.0);
  m.validate();
}

}  // namespace visgp
