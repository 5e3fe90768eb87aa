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

#include "stiffdiff/objectives/objectives.hpp"

#include <cmath>

namespace stiffdiff::objectives {

std::vector<Vec2> StiffnessSchedule::expand() const {
  const int H = horizon;
  const int P = phase_count();
  std::vector<Vec2> out(static_cast<size_t>(H));
  int t = 0;
  for (int p = 1; p <= P; ++p) {
    const int end = static_cast<int>(static_cast<int64_t>(p) * H / P);
    for (; t < end; ++t) out[static_cast<size_t>(t)] = phases[static_cast<size_t>(p - 1)];
  }
  return out;
}

int StiffnessSchedule::phase_of_step(int t) const {
  const int H = horizon;
  const int P = phase_count();
  for (int p = 1; p <= P; ++p) {
    if (t < static_cast<int>(static_cast<int64_t>(p) * H / P)) return p - 1;
  }
  return P - 1;
}

StiffnessSchedule StiffnessSchedule::constant(int horizon, Vec2 k) {
  StiffnessSchedule s;
  s.horizon = horizon;
  s.phases = {k};
  return s;
}

nlohmann::json StiffnessSchedule::to_json() const {
  nlohmann::json k = nlohmann::json::array();
  for (const Vec2& p : phases) k.push_back({p.x, p.z});
  return {{"P", phase_count()}, {"k", k}};
}

StiffnessSchedule StiffnessSchedule::from_json(const nlohmann::json& j, int horizon) {
  StiffnessSchedule s;
  s.horizon = horizon;
  for (const auto& p : j.at("k")) s.phases.push_back({p.at(0), p.at(1)});
  if (static_cast<int>(s.phases.size()) != j.at("P").get<int>())
    throw std::runtime_error("schedule phase count mismatch");
  return s;
}

double task_objective(std::span<const Vec2> observed, std::span<const Vec2> demo) {
  if (observed.size() != demo.size())
    throw LengthMismatch("task_objective: series lengths differ");
  double s = 0.0;
  for (size_t t = 0; t < observed.size(); ++t) {
    const Vec2 d = observed[t] - demo[t];
    s += d.x * d.x + d.z * d.z;
  }
  return std::sqrt(s / (2.0 * static_cast<double>(observed.size())));
}

double compliance_objective(const StiffnessSchedule& schedule) {
  const std::vector<Vec2> k = schedule.expand();
  double s = 0.0;
  for (const Vec2& v : k) s += std::abs(v.x) + std::abs(v.z);
  return s / static_cast<double>(schedule.horizon);
}

double correlation_metric(std::span<const double> predicted,
                          std::span<const double> truth) {
  const size_t n = predicted.size();
  if (n != truth.size())
    throw LengthMismatch("correlation_metric: series lengths differ");
  if (n < 2) throw DegenerateVariance("correlation needs >= 2 pairs");
  double mp = 0.0, mt = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mp += predicted[i];
    mt += truth[i];
  }
  mp /= static_cast<double>(n);
  mt /= static_cast<double>(n);
  double spt = 0.0, spp = 0.0, stt = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dp = predicted[i] - mp;
    const double dt = truth[i] - mt;
    spt += dp * dt;
    spp += dp * dp;
    stt += dt * dt;
  }
  if (spp <= 0.0 || stt <= 0.0)
    throw DegenerateVariance("correlation input has zero variance");
  return spt / std::sqrt(spp * stt);
}

}  // namespace stiffdiff::objectives
