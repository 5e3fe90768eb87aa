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

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stiffdiff/objectives/objectives.hpp"
#include "stiffdiff/sim/contact.hpp"
#include "stiffdiff/sim/surface.hpp"
#include "stiffdiff/sim/trajectory.hpp"
#include "stiffdiff/util/vec2.hpp"

namespace stiffdiff::sim {

struct SingularStiffness : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DemoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Diagonal task-space inertia (kg). With the damping rule D = 2 sqrt(K) the
// closed loop is critically damped exactly for unit inertia, so unit inertia
// is the default.
inline constexpr Vec2 kDefaultInertia{1.0, 1.0};

// Contact activates when the current gap falls below this margin; recorded
// forces are zero whenever the recorded pose's gap exceeds it.
inline constexpr double kContactActivation = 1e-6;

struct ImpedanceParams {
  Vec2 inertia = kDefaultInertia;  // diagonal entries > 0
  Vec2 stiffness;                  // N/m, diagonal entries > 0
  Vec2 damping;                    // N s/m, 2 sqrt(K) per the damping rule
  Vec2 attractor;                  // m
};

inline Vec2 critical_damping(const Vec2& stiffness) {
  return 2.0 * stiffness.sqrt_cwise();
}

// Attractor series that makes the impedance dynamics reproduce the demo:
//   x_attr_t = x_demo_t + K_t^{-1} (D_t v_t + Lambda a_t - F_demo_t)
// with v, a from central differences of the demo poses (one-sided stencils
// at the endpoints). Throws SingularStiffness when a stiffness entry < 1e-9.
std::vector<Vec2> compute_attractor(const Trajectory& demo,
                                    const objectives::StiffnessSchedule& schedule,
                                    const Vec2& inertia = kDefaultInertia);

// Semi-implicit Euler rollout of the impedance model against the surface with
// per-step stiffness from the schedule, damping from the critical-damping
// rule, and attractors from compute_attractor. Starts from the demo's initial
// state; records the observed contact forces.
Trajectory rollout(const SurfaceModel& surface,
                   const objectives::StiffnessSchedule& schedule,
                   const Trajectory& demo);

// Lower-level stepper shared by rollout and demo generation: integrates the
// impedance model along a given attractor path.
Trajectory integrate_impedance(const SurfaceModel& surface,
                               const std::vector<Vec2>& stiffness,
                               const std::vector<Vec2>& attractors,
                               Vec2 pose0, Vec2 velocity0, double dt,
                               const Vec2& inertia = kDefaultInertia);

enum class DemoKind { kSpiralAnalog, kWavelike, kLine };

std::string to_string(DemoKind k);
DemoKind demo_kind_from_string(const std::string& s);

struct DemoParams {
  int horizon = 200;
  double dt = 0.01;
  double speed = 0.08;          // m/s tangential sweep
  double force_base = 5.0;      // N target normal force
  double force_amplitude = 3.0; // N modulation (wavelike)
  double start_x = -0.15;       // m
  double stiffness = 1200.0;    // N/m of the demo controller
  double jitter = 0.1;          // relative seeded perturbation of the above
};

// Contact-maintaining demonstration produced by rolling out a hand-tuned
// stiff controller whose attractor presses into the surface. Deterministic
// given the seed. Throws DemoFailure when contact is lost for more than 10%
// of the steps.
Trajectory generate_demo(const SurfaceModel& surface, DemoKind kind,
                         const DemoParams& params, uint64_t seed);

}  // namespace stiffdiff::sim
