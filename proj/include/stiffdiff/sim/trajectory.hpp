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
#include <vector>

#include "json.hpp"
#include "stiffdiff/util/vec2.hpp"

namespace stiffdiff::sim {

// Time series of end-effector state over H steps at fixed dt. `forces` are
// the external contact forces acting on the end-effector.
struct Trajectory {
  double dt = 0.01;
  std::vector<Vec2> poses;
  std::vector<Vec2> velocities;
  std::vector<Vec2> attractors;
  std::vector<Vec2> forces;
  nlohmann::json meta;  // surface, schedule, seed, ...

  int horizon() const { return static_cast<int>(poses.size()); }

  // One JSON object per trajectory; arrays are [H][2] row-major.
  std::string to_jsonl() const;
  static Trajectory from_jsonl(const std::string& line);

  void save(const std::string& path) const;
  static Trajectory load(const std::string& path);
};

}  // namespace stiffdiff::sim
