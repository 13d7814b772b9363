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

#include <optional>
#include <span>
#include <vector>

namespace visgp {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }

double distance(Point2 a, Point2 b);
double cross(Point2 o, Point2 a, Point2 b);

using Ring = std::vector<Point2>;

/// Closed planar region: an outer ring minus zero or more holes.
///
/// Rings may touch themselves at isolated vertices (pinch points), which is how
/// unions of convex pieces meeting at a single point are represented. Proper
/// edge crossings and collinear edge overlaps are rejected. On construction the
/// outer ring is oriented counterclockwise and holes clockwise, so the domain
/// interior always lies to the left of every directed edge.
class PolygonDomain {
 public:
  /// Throws Error(InvalidGeometry) on invalid rings. A negative tolerance
  /// selects the default of 1e-9 times the domain diameter.
  PolygonDomain(Ring outer, std::vector<Ring> holes = {}, double boundary_tolerance = -1.0);

  const Ring& outer() const { return outer_; }
  const std::vector<Ring>& holes() const { return holes_; }
  double boundary_tolerance() const { return tolerance_; }
  double diameter() const { return diameter_; }
  Point2 min_corner() const { return min_; }
  Point2 max_corner() const { return max_; }
  double area() const;

  /// All rings, outer first.
  std::vector<const Ring*> rings() const;

  /// Vertices that a shortest path may bend around: reflex vertices plus
  /// vertices shared by more than one ring position (pinch points).
  const std::vector<Point2>& waypoints() const { return waypoints_; }

 private:
  Ring outer_;
  std::vector<Ring> holes_;
  double tolerance_ = 0.0;
  double diameter_ = 0.0;
  Point2 min_{};
  Point2 max_{};
  std::vector<Point2> waypoints_;
};

bool point_in_domain(Point2 p, const PolygonDomain& dom);

/// True iff the closed segment ab lies in the (closed) domain. Grazing
/// contacts with the boundary count as inside. Throws InvalidInput if an
/// endpoint is outside the domain.
bool segment_in_domain(Point2 a, Point2 b, const PolygonDomain& dom);

/// Shortest in-domain path length. Throws Unreachable if no path exists.
double geodesic_distance(Point2 a, Point2 b, const PolygonDomain& dom);

/// Single-source shortest-path distances inside a domain.
///
/// Distances to the domain waypoints are solved once; each query then only
/// needs visibility tests from the query point to the waypoints.
class GeodesicField {
 public:
  GeodesicField(Point2 source, const PolygonDomain& dom);

  Point2 source() const { return source_; }

  /// Throws Unreachable if `p` cannot be reached from the source.
  double distance_to(Point2 p) const;

 private:
  const PolygonDomain* dom_;
  Point2 source_;
  std::vector<double> waypoint_dist_;
};

}  // namespace visgp
