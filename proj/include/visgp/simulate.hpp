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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "visgp/estimate.hpp"
#include "visgp/geometry.hpp"
#include "visgp/predict.hpp"

namespace visgp {

/// Base [-5.75, 1.75] x [-7, -5] with four prongs of width 1.5 centered at
/// x = -5, -3, -1, 1 running from y = -5 up to y = 5.
PolygonDomain make_fork_domain();
/// Square [-6, 6]^2 with the notch (-4, 4) x (-6, -2) cut from the bottom
/// edge; the arms meet along the top band.
PolygonDomain make_u_domain();
/// [-1, 0]^2 and [0, 1]^2 sharing only the origin.
PolygonDomain make_figure_eight();
/// Three unit squares chained corner to corner through (0, 0) and (1, 0).
PolygonDomain make_three_lobe_chain();

/// Source points for the fork response surface.
inline constexpr Point2 kForkSources[4] = {{-5, -5}, {-3, -5}, {-1, -5}, {1, -5}};
/// Center of the U-domain response surface.
inline constexpr Point2 kUCenter{0, 2};

/// d1^2 / 3 + 3 sin(d3) - d2 d4 with d_i the geodesic distance to source i.
double fork_truth_raw(Point2 s, const PolygonDomain& dom);
/// g^3 + sin(3 g), g the geodesic distance from `center`.
double u_truth_raw(Point2 s, const PolygonDomain& dom, Point2 center = kUCenter);
/// Centered and scaled to unit (population) standard deviation.
std::vector<double> standardize(std::span<const double> v);

enum class ScenarioDomain { Fork, UShape, FigureEight, Custom };
std::string to_string(ScenarioDomain d);
ScenarioDomain parse_scenario_domain(const std::string& name);

enum class HoldoutKind { Checkerboard, RandomFraction };

struct Holdout {
  HoldoutKind kind = HoldoutKind::Checkerboard;
  double fraction = 0.2;  // RandomFraction only
};

/// Fork data follow fork_truth_raw; the U-shape, figure-eight and custom
/// domains use u_truth_raw around kUCenter, (-0.5, -0.5) and custom_center.
struct SimScenario {
  ScenarioDomain domain = ScenarioDomain::Fork;
  /// Required for Custom.
  std::optional<PolygonDomain> custom;
  Point2 custom_center{};
  int n = 250;
  double nugget_sd = 0.1;
  Holdout holdout;
  int replicates = 20;
  std::uint64_t seed = 1;
  int pool_size = 20000;
  int k = 10;
  FitMethod fit = FitMethod::FullMLE;
  SgdConfig sgd;
  ModelSpec model;

  void validate() const;
  PolygonDomain resolve_domain() const;
};

/// Distinct points drawn uniformly from the domain with the standardized
/// response at each.
struct ScenarioPool {
  std::vector<Point2> points;
  std::vector<double> truth;
};
ScenarioPool make_pool(const SimScenario& sc, const PolygonDomain& dom);

/// Test mask over `points`: square tiles of side diameter / 10 on a grid
/// whose origin is shifted by a seed-dependent offset; tile (i, j) is held
/// out when (i + 2 j) mod 5 == 0, about one tile in five.
std::vector<bool> checkerboard_mask(std::span<const Point2> points, const PolygonDomain& dom, std::uint64_t seed);
/// round(fraction * n) points chosen uniformly as the test set.
std::vector<bool> random_mask(std::size_t n, double fraction, std::uint64_t seed);

enum class SimMethod { VisGpNC, VisGpMP, VisGpPW, EuclideanGP };
std::string to_string(SimMethod m);
SimMethod parse_sim_method(const std::string& name);
inline const std::vector<SimMethod> kAllSimMethods = {SimMethod::VisGpNC, SimMethod::VisGpMP, SimMethod::VisGpPW,
                                                      SimMethod::EuclideanGP};

struct ReplicateResult {
  int replicate = 0;
  SimMethod method = SimMethod::VisGpMP;
  bool ok = false;
  std::string error;
  double mse = 0.0;
  double coverage = 0.0;
  double ci_length = 0.0;
  double wall_seconds = 0.0;
  int n_train = 0;
  int n_test = 0;
};

struct MethodSummary {
  SimMethod method = SimMethod::VisGpMP;
  double mse = 0.0;
  double coverage = 0.0;
  double ci_length = 0.0;
  double wall_seconds = 0.0;
  int replicates_ok = 0;
  int failures = 0;
};

struct SimReport {
  std::vector<MethodSummary> rows;
  std::vector<ReplicateResult> replicates;
};

/// One replicate: subsample, add noise, split, fit, predict, score. Failures
/// are recorded in the returned rows instead of thrown.
std::vector<ReplicateResult> run_replicate(const SimScenario& sc, const PolygonDomain& dom, const ScenarioPool& pool,
                                           int replicate, std::span<const SimMethod> methods);

/// Replicates in parallel, then per-method means over successful replicates.
SimReport run_scenario(const SimScenario& sc, std::span<const SimMethod> methods);

}  // namespace visgp
