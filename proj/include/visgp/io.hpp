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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "visgp/estimate.hpp"
#include "visgp/geometry.hpp"
#include "visgp/predict.hpp"
#include "visgp/simulate.hpp"

namespace visgp::io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

/// GeoJSON Polygon (bare geometry, Feature, or a FeatureCollection holding
/// one polygon feature). The repeated closing vertex is optional.
PolygonDomain parse_domain_geojson(const std::string& text);
/// CSV with header ring_id,x,y; ring 0 is the outer ring, others are holes.
PolygonDomain parse_domain_csv(const std::string& text);
/// Dispatches on extension: .csv, otherwise GeoJSON.
PolygonDomain load_domain(const std::filesystem::path& path);

/// Observations from CSV with header x,y,value[,covariate_*]. The design is
/// an intercept column followed by the covariates in file order.
struct Observations {
  std::vector<Point2> points;
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> covariates;
};
Observations parse_observations(const std::string& text);
Observations load_observations(const std::filesystem::path& path);

/// Prediction sites from CSV with header x,y[,covariate_*]; `covariates`
/// must match the names used at fit time.
struct Sites {
  std::vector<Point2> points;
  Eigen::MatrixXd X;
};
Sites parse_sites(const std::string& text, const std::vector<std::string>& covariates);
Sites load_sites(const std::filesystem::path& path, const std::vector<std::string>& covariates);

/// x,y,mean,variance,lower,upper,n_neighbors,strategy,status
std::string predictions_csv(std::span<const Point2> sites, std::span<const Prediction> preds);

/// A fit together with the model and covariate names needed to predict.
struct FitRecord {
  FitResult fit;
  ModelSpec model;
  std::vector<std::string> covariates;
};
nlohmann::json fit_to_json(const FitRecord& rec);
FitRecord fit_from_json(const nlohmann::json& j);
/// iteration,component,value
std::string trace_csv(const std::vector<TraceEntry>& trace);

/// method,mse,coverage,ci_length,wall_seconds,replicates_ok,failures
std::string sim_report_csv(const SimReport& report);
/// replicate,method,ok,mse,coverage,ci_length,wall_seconds,n_train,n_test,error
std::string sim_replicates_csv(const SimReport& report);

std::string matrix_csv(const Eigen::MatrixXd& m);
/// u64 rows, u64 cols, then row-major f64, little-endian.
void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_binary(const std::filesystem::path& path);

/// Settings shared by the CLI commands. JSON keys match the field names.
struct RunConfig {
  std::string domain_path;
  std::string data_path;
  std::string family = "exponential";
  double nu = 0.5;
  int k = 10;
  std::optional<double> d_max;
  std::string fit_method = "full";
  SgdConfig sgd;
  std::string strategy = "mp";
  double level = 0.95;
  std::uint64_t seed = 1;
  std::string cache_dir = ".visgp-cache";
  int nngp_threshold = 300;
  int nngp_neighbors = 15;
  double gtol = 1e-6;
  int max_iter = 200;

  /// Throws InvalidInput on bad values or on paths that are set but missing.
  void validate() const;
  ModelSpec model() const;
  LikelihoodOptions likelihood() const;
};
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

}  // namespace visgp::io
