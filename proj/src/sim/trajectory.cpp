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

#include "stiffdiff/sim/trajectory.hpp"

#include <stdexcept>

#include "stiffdiff/util/io.hpp"

namespace stiffdiff::sim {

namespace {

nlohmann::json series_json(const std::vector<Vec2>& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Vec2& v : s) arr.push_back({v.x, v.z});
  return arr;
}

std::vector<Vec2> series_from_json(const nlohmann::json& arr) {
  std::vector<Vec2> out;
  out.reserve(arr.size());
  for (const auto& v : arr) out.push_back({v.at(0), v.at(1)});
  return out;
}

}  // namespace

std::string Trajectory::to_jsonl() const {
  nlohmann::json j{{"dt", dt},
                   {"poses", series_json(poses)},
                   {"velocities", series_json(velocities)},
                   {"attractors", series_json(attractors)},
                   {"forces", series_json(forces)},
                   {"meta", meta.is_null() ? nlohmann::json::object() : meta}};
  return j.dump();
}

Trajectory Trajectory::from_jsonl(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  Trajectory t;
  t.dt = j.at("dt");
  t.poses = series_from_json(j.at("poses"));
  t.velocities = series_from_json(j.at("velocities"));
  t.attractors = series_from_json(j.at("attractors"));
  t.forces = series_from_json(j.at("forces"));
  t.meta = j.at("meta");
  const size_t h = t.poses.size();
  if (t.velocities.size() != h || t.attractors.size() != h ||
      t.forces.size() != h)
    throw std::runtime_error("trajectory arrays have unequal lengths");
  return t;
}

void Trajectory::save(const std::string& path) const {
  write_file_atomic(path, to_jsonl() + "\n");
}

Trajectory Trajectory::load(const std::string& path) {
  return from_jsonl(read_file(path));
}

}  // namespace stiffdiff::sim
