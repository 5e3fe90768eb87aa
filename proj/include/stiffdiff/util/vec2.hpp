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

#include <cmath>

namespace stiffdiff {

// Planar vector, x = tangential axis, z = normal (vertical) axis.
struct Vec2 {
  double x = 0.0;
  double z = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double z_) : x(x_), z(z_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, z + o.z}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, z - o.z}; }
  constexpr Vec2 operator-() const { return {-x, -z}; }
  constexpr Vec2 operator*(double s) const { return {x * s, z * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, z / s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; z += o.z; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; z -= o.z; return *this; }

  // Elementwise product; used for diagonal-matrix times vector.
  constexpr Vec2 cwise(const Vec2& o) const { return {x * o.x, z * o.z}; }
  constexpr Vec2 cwise_inv() const { return {1.0 / x, 1.0 / z}; }

  double dot(const Vec2& o) const { return x * o.x + z * o.z; }
  double norm() const { return std::sqrt(x * x + z * z); }
  Vec2 sqrt_cwise() const { return {std::sqrt(x), std::sqrt(z)}; }
};

inline constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

}  // namespace stiffdiff
