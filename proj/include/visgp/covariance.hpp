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

#include "json.hpp"

#include "visgp/geometry.hpp"

namespace visgp {

enum class CovFamily { Exponential, Matern };

std::string to_string(CovFamily family);
CovFamily parse_family(const std::string& name);

/// Isotropic parent covariance with nugget.
///
/// Exponential: sigma2 * exp(-phi d).
/// Matern:      sigma2 * 2^(1-nu) / Gamma(nu) * (phi d)^nu * K_nu(phi d).
/// `nu` is ignored by the exponential family. The nugget `tau2` is added to
/// the diagonal by cov_matrix only, never by cov_value.
struct CovarianceModel {
  CovFamily family = CovFamily::Exponential;
  double sigma2 = 1.0;
  double phi = 1.0;
  double nu = 0.5;
  double tau2 = 0.0;

  /// Throws Error(InvalidParam) when a parameter is out of range.
  void validate() const;
};

double cov_value(const CovarianceModel& model, double d);

/// Derivative of cov_value with respect to log(phi).
double cov_dlogphi(const CovarianceModel& model, double d);

/// Matern correlation through the general Bessel path, no closed-form shortcut.
double matern_correlation_bessel(double nu, double x);

Eigen::MatrixXd cov_matrix(std::span<const Point2> points, const CovarianceModel& model, bool include_nugget);

/// Cross covariance C(a_i, b_j) without nugget.
Eigen::MatrixXd cross_cov(std::span<const Point2> a, std::span<const Point2> b, const CovarianceModel& model);

/// Cholesky of an SPD matrix. On failure adds 1e-10 * jitter_scale to the
/// diagonal once, logging the event; returns nullopt if that fails too.
std::optional<Eigen::LLT<Eigen::MatrixXd>> factor_spd(const Eigen::MatrixXd& m, double jitter_scale);

void to_json(nlohmann::json& j, const CovarianceModel& m);
void from_json(const nlohmann::json& j, CovarianceModel& m);

}  // namespace visgp
