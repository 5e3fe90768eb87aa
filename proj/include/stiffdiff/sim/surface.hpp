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

#pragma once

#include <string>

#include "json.hpp"
#include "stiffdiff/util/vec2.hpp"

namespace stiffdiff::sim {

enum class SurfaceKind { kFlat, kSinusoid, kCircularArc };

std::string to_string(SurfaceKind k);
SurfaceKind surface_kind_from_string(const std::string& s);

// Rigid planar height field z = s(x). Material fills the region below the
// curve. For kCircularArc the curve is a bowl: lowest point `amplitude`
// below `offset` at x=0, rim reaching z=offset at x = +/- wavelength/2.
struct SurfaceModel {
  SurfaceKind kind = SurfaceKind::kFlat;
  double amplitude = 0.0;    // meters
  double wavelength = 0.5;   // meters
  double offset = 0.0;       // meters
  double friction = 0.5;     // Coulomb coefficient, >= 0

  double height(double x) const;
  double slope(double x) const;

  nlohmann::json to_json() const;
  static SurfaceModel from_json(const nlohmann::json& j);
};

struct GapResult {
  double gap = 0.0;  // signed distance to the surface; negative = penetration
  Vec2 normal;       // unit vector pointing away from the material
};

// Signed distance from `pose` to the surface curve and the outward normal at
// the closest point. Exact for flat and circular-arc; iterative closest
// point for the sinusoid.
GapResult surface_gap(const SurfaceModel& surface, const Vec2& pose);

}  // namespace stiffdiff::sim
