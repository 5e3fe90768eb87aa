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

#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "stiffdiff/util/vec2.hpp"

namespace stiffdiff::objectives {

struct LengthMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateVariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-phase diagonal stiffness, expanded to a length-H series. Phase p
// (1-based) covers steps [floor((p-1)H/P)+1, floor(pH/P)]; the phases
// partition [1, H] exactly.
struct StiffnessSchedule {
  int horizon = 0;
  std::vector<Vec2> phases;  // (k_x, k_z) per phase, N/m

  int phase_count() const { return static_cast<int>(phases.size()); }
  std::vector<Vec2> expand() const;
  int phase_of_step(int t) const;  // t in [0, horizon)

  static StiffnessSchedule constant(int horizon, Vec2 k);

  nlohmann::json to_json() const;  // {"P": ..., "k": [[kx,kz],...]}
  static StiffnessSchedule from_json(const nlohmann::json& j, int horizon);
};

struct ObjectivePair {
  double task = 0.0;  // force-tracking RMSE, Newtons
  double comp = 0.0;  // mean per-step stiffness magnitude
};

struct EvalMetrics {
  double mse = 0.0;  // normalized force MSE
  double r = 0.0;    // Pearson correlation of predicted vs true task objective
};

// RMSE between observed and demonstrated contact forces, over all steps and
// both force axes.
double task_objective(std::span<const Vec2> observed, std::span<const Vec2> demo);

// Mean over steps of |k_x| + |k_z| on the expanded schedule. The per-step
// mean (rather than the raw sum over t) keeps different horizons comparable;
// it is a positive rescaling, so dominance relations are unaffected.
double compliance_objective(const StiffnessSchedule& schedule);

// Pearson correlation; requires >= 2 pairs and nonzero variance on each side.
double correlation_metric(std::span<const double> predicted,
                          std::span<const double> truth);

}  // namespace stiffdiff::objectives
