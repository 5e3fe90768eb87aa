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

#include <stdexcept>

#include "stiffdiff/util/vec2.hpp"

namespace stiffdiff::sim {

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Active contact directions; at most one normal and one tangent row in the
// planar setting.
struct ContactJacobian {
  int rows = 0;   // 0 = no contact, 1 = normal only, 2 = normal + tangent
  Vec2 normal;    // unit, away from the material
  Vec2 tangent;   // unit, normal rotated -90 degrees
};

// One step's contact subproblem. The accel that minimizes
//   (L a - F_act)^T L^{-1} (L a - F_act) + (J a - a_ref)^T R^{-1} (J a - a_ref)
// subject to the contact force f = L a - F_act lying in the Coulomb cone
// (f_n >= 0, |f_t| <= mu f_n). a_ref lives in constraint space (per J row).
struct ContactProblem {
  Vec2 actuated_force;   // N, spring/damper force driving the end-effector
  ContactJacobian jacobian;
  Vec2 reference_accel;  // (normal, tangent) target accelerations
  Vec2 regularizer = {1e-4, 1e-4};  // R diagonal, > 0
  double friction = 0.0;
};

struct ContactSolution {
  Vec2 accel;          // world frame
  Vec2 contact_force;  // world frame; zero when no contact is active
  int iterations = 0;
};

// Projected-gradient solve over the (<= 2)-dimensional contact force.
// Iteration cap 200; stops when the objective decrease falls below a 1e-10
// relative tolerance. Throws NonConvergence past the cap.
ContactSolution solve_contact(const ContactProblem& problem, const Vec2& inertia);

}  // namespace stiffdiff::sim
