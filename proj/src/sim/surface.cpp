// Copyright 2026 The stiffdiff Authors
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

#include "stiffdiff/sim/surface.hpp"

#include <cmath>
#include <stdexcept>

namespace stiffdiff::sim {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Bowl circle for kCircularArc: radius and center from depth d and
// half-width w, so that the arc passes (0, offset-d) and (+/-w, offset).
struct ArcGeometry {
  double radius;
  Vec2 center;
};

ArcGeometry arc_geometry(const SurfaceModel& s) {
  const double d = s.amplitude;
  const double w = 0.5 * s.wavelength;
  const double r = (w * w + d * d) / (2.0 * d);
  return {r, Vec2{0.0, s.offset - d + r}};
}

}  // namespace

std::string to_string(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::kFlat: return "flat";
    case SurfaceKind::kSinusoid: return "sinusoid";
    case SurfaceKind::kCircularArc: return "circular-arc";
  }
  return "flat";
}

SurfaceKind surface_kind_from_string(const std::string& s) {
  if (s == "flat") return SurfaceKind::kFlat;
  if (s == "sinusoid") return SurfaceKind::kSinusoid;
  if (s == "circular-arc") return SurfaceKind::kCircularArc;
  throw std::runtime_error("unknown surface kind: " + s);
}

double SurfaceModel::height(double x) const {
  switch (kind) {
    case SurfaceKind::kFlat:
      return offset;
    case SurfaceKind::kSinusoid:
      return offset + amplitude * std::sin(kTwoPi * x / wavelength);
    case SurfaceKind::kCircularArc: {
      const ArcGeometry g = arc_geometry(*this);
      const double dx = x - g.center.x;
      const double under = g.radius * g.radius - dx * dx;
      // outside the rim the bowl wall continues along the circle tangent
      if (under <= 0.0) return g.center.z;
      return g.center.z - std::sqrt(under);
    }
  }
  return offset;
}

double SurfaceModel::slope(double x) const {
  switch (kind) {
    case SurfaceKind::kFlat:
      return 0.0;
    case SurfaceKind::kSinusoid:
      return amplitude * kTwoPi / wavelength * std::cos(kTwoPi * x / wavelength);
    case SurfaceKind::kCircularArc: {
      const ArcGeometry g = arc_geometry(*this);
      const double dx = x - g.center.x;
      const double under = g.radius * g.radius - dx * dx;
      if (under <= 1e-12) return dx > 0 ? 1e6 : -1e6;
      return dx / std::sqrt(under);
    }
  }
  return 0.0;
}

namespace {

GapResult sinusoid_gap(const SurfaceModel& s, const Vec2& p) {
  // Closest point on (u, s.height(u)): coarse scan over one wavelength
  // around p.x, then ternary refinement of the squared distance.
  const double lam = s.wavelength;
  auto dist2 = [&](double u) {
    const double dz = s.height(u) - p.z;
    const double du = u - p.x;
    return du * du + dz * dz;
  };
  const int kScan = 201;
  double best_u = p.x, best_d = dist2(p.x);
  for (int i = 0; i < kScan; ++i) {
    const double u = p.x - lam + 2.0 * lam * i / (kScan - 1);
    const double d = dist2(u);
    if (d < best_d) {
      best_d = d;
      best_u = u;
    }
  }
  double lo = best_u - 2.0 * lam / (kScan - 1);
  double hi = best_u + 2.0 * lam / (kScan - 1);
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (dist2(m1) < dist2(m2)) hi = m2; else lo = m1;
  }
  const double u = 0.5 * (lo + hi);
  const double sp = s.slope(u);
  const double inv = 1.0 / std::sqrt(1.0 + sp * sp);
  const Vec2 normal{-sp * inv, inv};
  const double dist = std::sqrt(dist2(u));
  const double sign = (p.z >= s.height(p.x)) ? 1.0 : -1.0;
  return {sign * dist, normal};
}

}  // namespace

GapResult surface_gap(const SurfaceModel& surface, const Vec2& pose) {
  switch (surface.kind) {
    case SurfaceKind::kFlat:
      return {pose.z - surface.offset, Vec2{0.0, 1.0}};
    case SurfaceKind::kCircularArc: {
      const ArcGeometry g = arc_geometry(surface);
      const Vec2 to_center = g.center - pose;
      const double d = to_center.norm();
      if (d < 1e-12) return {g.radius, Vec2{0.0, 1.0}};
      // inside the circle = above the bowl surface
      return {g.radius - d, to_center / d};
    }
    case SurfaceKind::kSinusoid:
      return sinusoid_gap(surface, pose);
  }
  return {pose.z - surface.offset, Vec2{0.0, 1.0}};
}

nlohmann::json SurfaceModel::to_json() const {
  return {{"kind", to_string(kind)},
          {"amplitude", amplitude},
          {"wavelength", wavelength},
          {"offset", offset},
          {"friction", friction}};
}

SurfaceModel SurfaceModel::from_json(const nlohmann::json& j) {
  SurfaceModel s;
  s.kind = surface_kind_from_string(j.at("kind").get<std::string>());
  s.amplitude = j.at("amplitude");
  s.wavelength = j.at("wavelength");
  s.offset = j.at("offset");
  s.friction = j.at("friction");
  return s;
}

}  // namespace stiffdiff::sim
