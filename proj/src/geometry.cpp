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

#include "visgp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <queue>
#include <string>

#include "visgp/error.hpp"

namespace visgp {
namespace {

// Relative tolerance on cross products; double precision only.
constexpr double kOrientEps = 1e-12;

double signed_area(const Ring& r) {
  double a = 0.0;
  for (std::size_t i = 0, n = r.size(); i < n; ++i) {
    const Point2& p = r[i];
    const Point2& q = r[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

// Sign of the turn a->b->c, snapped to zero inside a relative band.
int orient(Point2 a, Point2 b, Point2 c) {
  const double v = cross(a, b, c);
  const double scale = distance(a, b) * distance(a, c);
  if (std::abs(v) <= kOrientEps * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool within_box(Point2 p, Point2 a, Point2 b, double slack) {
  return p.x >= std::min(a.x, b.x) - slack && p.x <= std::max(a.x, b.x) + slack &&
         p.y >= std::min(a.y, b.y) - slack && p.y <= std::max(a.y, b.y) + slack;
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double len2 = d.x * d.x + d.y * d.y;
  if (len2 == 0.0) return distance(p, a);
  double t = ((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * d);
}

bool inside_ring(Point2 p, const Ring& r) {
  bool inside = false;
  for (std::size_t i = 0, n = r.size(), j = n - 1; i < n; j = i++) {
    const Point2& a = r[i];
    const Point2& b = r[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

enum class Contact { None, Proper, Touch, Overlap };

Contact classify(Point2 a, Point2 b, Point2 c, Point2 d) {
  const int o1 = orient(a, b, c);
  const int o2 = orient(a, b, d);
  const int o3 = orient(c, d, a);
  const int o4 = orient(c, d, b);
  if (o1 * o2 < 0 && o3 * o4 < 0) return Contact::Proper;
  if (o1 == 0 && o2 == 0) {
    // Collinear: overlap of positive length?
    const Point2 dir = b - a;
    const double len2 = dir.x * dir.x + dir.y * dir.y;
    auto param = [&](Point2 p) { return ((p.x - a.x) * dir.x + (p.y - a.y) * dir.y) / len2; };
    const double lo = std::max(0.0, std::min(param(c), param(d)));
    const double hi = std::min(1.0, std::max(param(c), param(d)));
    if (hi - lo > 1e-12) return Contact::Overlap;
    if (hi - lo >= -1e-12) return Contact::Touch;
    return Contact::None;
  }
  const bool touch = (o1 == 0 && within_box(c, a, b, 0.0)) || (o2 == 0 && within_box(d, a, b, 0.0)) ||
                     (o3 == 0 && within_box(a, c, d, 0.0)) || (o4 == 0 && within_box(b, c, d, 0.0));
  return touch ? Contact::Touch : Contact::None;
}

Ring clean_ring(Ring r, const char* what) {
  if (r.size() >= 2 && r.front() == r.back()) r.pop_back();
  Ring out;
  out.reserve(r.size());
  for (const Point2& p : r) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorCode::InvalidGeometry, std::string(what) + " has a non-finite coordinate");
    }
    if (out.empty() || !(out.back() == p)) out.push_back(p);
  }
  if (out.size() >= 2 && out.front() == out.back()) out.pop_back();
  if (out.size() < 3) throw Error(ErrorCode::InvalidGeometry, std::string(what) + " needs at least 3 vertices");
  if (signed_area(out) == 0.0) throw Error(ErrorCode::InvalidGeometry, std::string(what) + " has zero area");
  return out;
}

// Weakly simple: non-adjacent edges may only share endpoints that are vertices
// of both (pinch points); no proper crossings, overlaps, or T-contacts.
void check_simple(const Ring& r, const char* what) {
  const std::size_t n = r.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = r[i], b = r[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point2 c = r[j], d = r[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      const Contact k = classify(a, b, c, d);
      if (k == Contact::Proper || k == Contact::Overlap) {
        throw Error(ErrorCode::InvalidGeometry, std::string(what) + " is self-intersecting");
      }
      if (k == Contact::Touch && !adjacent) {
        const bool shared = a == c || a == d || b == c || b == d;
        if (!shared) throw Error(ErrorCode::InvalidGeometry, std::string(what) + " touches itself mid-edge");
      }
    }
  }
}

bool rings_touch(const Ring& r, const Ring& s) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (classify(r[i], r[(i + 1) % r.size()], s[j], s[(j + 1) % s.size()]) != Contact::None) return true;
    }
  }
  return false;
}

}  // namespace

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

PolygonDomain::PolygonDomain(Ring outer, std::vector<Ring> holes, double boundary_tolerance) {
  outer_ = clean_ring(std::move(outer), "outer ring");
  check_simple(outer_, "outer ring");
  if (signed_area(outer_) < 0) std::reverse(outer_.begin(), outer_.end());

  for (auto& h : holes) {
    Ring hole = clean_ring(std::move(h), "hole ring");
    check_simple(hole, "hole ring");
    if (signed_area(hole) > 0) std::reverse(hole.begin(), hole.end());
    if (rings_touch(hole, outer_)) throw Error(ErrorCode::InvalidGeometry, "hole touches the outer ring");
    for (const Point2& p : hole) {
      if (!inside_ring(p, outer_)) throw Error(ErrorCode::InvalidGeometry, "hole is not inside the outer ring");
    }
    for (const Ring& other : holes_) {
      if (rings_touch(hole, other) || inside_ring(hole.front(), other) || inside_ring(other.front(), hole)) {
        throw Error(ErrorCode::InvalidGeometry, "holes overlap");
      }
    }
    holes_.push_back(std::move(hole));
  }

  min_ = max_ = outer_.front();
  for (const Point2& p : outer_) {
    min_ = {std::min(min_.x, p.x), std::min(min_.y, p.y)};
    max_ = {std::max(max_.x, p.x), std::max(max_.y, p.y)};
    for (const Point2& q : outer_) diameter_ = std::max(diameter_, distance(p, q));
  }
  tolerance_ = boundary_tolerance >= 0.0 ? boundary_tolerance : 1e-9 * diameter_;

  std::vector<Point2> all;
  for (const Ring* r : rings()) all.insert(all.end(), r->begin(), r->end());
  for (const Ring* r : rings()) {
    const std::size_t n = r->size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 prev = (*r)[(i + n - 1) % n], v = (*r)[i], next = (*r)[(i + 1) % n];
      const bool reflex = orient(prev, v, next) < 0;
      const bool pinch = std::count(all.begin(), all.end(), v) > 1;
      if ((reflex || pinch) && std::find(waypoints_.begin(), waypoints_.end(), v) == waypoints_.end()) {
        waypoints_.push_back(v);
      }
    }
  }
}

std::vector<const Ring*> PolygonDomain::rings() const {
  std::vector<const Ring*> out{&outer_};
  for (const Ring& h : holes_) out.push_back(&h);
  return out;
}

double PolygonDomain::area() const {
  double a = std::abs(signed_area(outer_));
  for (const Ring& h : holes_) a -= std::abs(signed_area(h));
  return a;
}

bool point_in_domain(Point2 p, const PolygonDomain& dom) {
  if (inside_ring(p, dom.outer())) {
    bool in_hole = false;
    for (const Ring& h : dom.holes()) {
      if (inside_ring(p, h)) {
        in_hole = true;
        break;
      }
    }
    if (!in_hole) return true;
  }
  const double tol = dom.boundary_tolerance();
  for (const Ring* r : dom.rings()) {
    for (std::size_t i = 0, n = r->size(); i < n; ++i) {
      if (point_segment_distance(p, (*r)[i], (*r)[(i + 1) % n]) <= tol) return true;
    }
  }
  return false;
}

bool segment_in_domain(Point2 a, Point2 b, const PolygonDomain& dom) {
  if (!point_in_domain(a, dom) || !point_in_domain(b, dom)) {
    throw Error(ErrorCode::InvalidInput, "segment endpoint outside the domain");
  }
  const Point2 dir = b - a;
  const double len2 = dir.x * dir.x + dir.y * dir.y;
  if (len2 == 0.0) return true;

  // Parameters along ab where the segment meets the boundary without crossing it.
  std::vector<double> ts{0.0, 1.0};
  auto param = [&](Point2 p) { return std::clamp(((p.x - a.x) * dir.x + (p.y - a.y) * dir.y) / len2, 0.0, 1.0); };

  for (const Ring* r : dom.rings()) {
    for (std::size_t i = 0, n = r->size(); i < n; ++i) {
      const Point2 p = (*r)[i], q = (*r)[(i + 1) % n];
      const int o1 = orient(a, b, p);
      const int o2 = orient(a, b, q);
      const int o3 = orient(p, q, a);
      const int o4 = orient(p, q, b);
      if (o1 * o2 < 0 && o3 * o4 < 0) return false;
      if (o1 == 0 && within_box(p, a, b, 0.0)) ts.push_back(param(p));
      if (o2 == 0 && within_box(q, a, b, 0.0)) ts.push_back(param(q));
    }
  }

  std::sort(ts.begin(), ts.end());
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    if (ts[i + 1] - ts[i] <= 1e-12) continue;
    const double mid = 0.5 * (ts[i] + ts[i + 1]);
    if (!point_in_domain(a + mid * dir, dom)) return false;
  }
  return true;
}

GeodesicField::GeodesicField(Point2 source, const PolygonDomain& dom) : dom_(&dom), source_(source) {
  if (!point_in_domain(source, dom)) throw Error(ErrorCode::InvalidInput, "geodesic source outside the domain");
  const auto& w = dom.waypoints();
  const std::size_t m = w.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  waypoint_dist_.assign(m, inf);

  // Dense Dijkstra; waypoint counts are small and visibility is tested lazily.
  std::vector<char> done(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    if (segment_in_domain(source, w[i], dom)) waypoint_dist_[i] = distance(source, w[i]);
  }
  for (std::size_t iter = 0; iter < m; ++iter) {
    std::size_t u = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (!done[i] && std::isfinite(waypoint_dist_[i]) && (u == m || waypoint_dist_[i] < waypoint_dist_[u])) u = i;
    }
    if (u == m) break;
    done[u] = 1;
    for (std::size_t v = 0; v < m; ++v) {
      if (done[v]) continue;
      const double cand = waypoint_dist_[u] + distance(w[u], w[v]);
      if (cand < waypoint_dist_[v] && segment_in_domain(w[u], w[v], dom)) waypoint_dist_[v] = cand;
    }
  }
}

double GeodesicField::distance_to(Point2 p) const {
  if (!point_in_domain(p, *dom_)) throw Error(ErrorCode::InvalidInput, "geodesic target outside the domain");
  double best = std::numeric_limits<double>::infinity();
  if (segment_in_domain(source_, p, *dom_)) best = distance(source_, p);
  const auto& w = dom_->waypoints();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double cand = waypoint_dist_[i] + distance(w[i], p);
    if (cand < best && segment_in_domain(w[i], p, *dom_)) best = cand;
  }
  if (!std::isfinite(best)) throw Error(ErrorCode::Unreachable, "points lie in disconnected components");
  return best;
}

double geodesic_distance(Point2 a, Point2 b, const PolygonDomain& dom) {
  // Canonical source choice makes the result exactly symmetric.
  if (b.x < a.x || (b.x == a.x && b.y < a.y)) std::swap(a, b);
  if (segment_in_domain(a, b, dom)) return distance(a, b);
  return GeodesicField(a, dom).distance_to(b);
}

}  // namespace visgp
