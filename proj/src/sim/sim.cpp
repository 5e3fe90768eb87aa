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

#include "stiffdiff/sim/sim.hpp"

#include <algorithm>
#include <cmath>

#include "stiffdiff/util/rng.hpp"

namespace stiffdiff::sim {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

// Central differences with second-order one-sided stencils at the ends.
void finite_differences(const std::vector<Vec2>& x, double dt,
                        std::vector<Vec2>& vel, std::vector<Vec2>& acc) {
  const int h = static_cast<int>(x.size());
  vel.assign(x.size(), Vec2{});
  acc.assign(x.size(), Vec2{});
  if (h < 3) return;
  for (int t = 1; t + 1 < h; ++t) {
    vel[t] = (x[t + 1] - x[t - 1]) / (2.0 * dt);
    acc[t] = (x[t + 1] - x[t] * 2.0 + x[t - 1]) / (dt * dt);
  }
  vel[0] = (x[0] * -3.0 + x[1] * 4.0 - x[2]) / (2.0 * dt);
  vel[h - 1] = (x[h - 1] * 3.0 - x[h - 2] * 4.0 + x[h - 3]) / (2.0 * dt);
  acc[0] = (x[0] - x[1] * 2.0 + x[2]) / (dt * dt);
  acc[h - 1] = (x[h - 1] - x[h - 2] * 2.0 + x[h - 3]) / (dt * dt);
}

// Bisection for the surface crossing along a free-flight step.
Vec2 clip_to_surface(const SurfaceModel& surface, const Vec2& from,
                     const Vec2& to) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    const Vec2 p = from + (to - from) * mid;
    if (surface_gap(surface, p).gap >= 0.0) lo = mid; else hi = mid;
  }
  return from + (to - from) * lo;
}

}  // namespace

std::string to_string(DemoKind k) {
  switch (k) {
    case DemoKind::kSpiralAnalog: return "spiral-analog";
    case DemoKind::kWavelike: return "wavelike";
    case DemoKind::kLine: return "line";
  }
  return "line";
}

DemoKind demo_kind_from_string(const std::string& s) {
  if (s == "spiral-analog") return DemoKind::kSpiralAnalog;
  if (s == "wavelike") return DemoKind::kWavelike;
  if (s == "line") return DemoKind::kLine;
  throw std::runtime_error("unknown demo kind: " + s);
}

std::vector<Vec2> compute_attractor(const Trajectory& demo,
                                    const objectives::StiffnessSchedule& schedule,
                                    const Vec2& inertia) {
  const std::vector<Vec2> k = schedule.expand();
  std::vector<Vec2> vel, acc;
  finite_differences(demo.poses, demo.dt, vel, acc);
  std::vector<Vec2> attr(demo.poses.size());
  for (size_t t = 0; t < demo.poses.size(); ++t) {
    const Vec2& kt = k[t];
    if (kt.x < 1e-9 || kt.z < 1e-9)
      throw SingularStiffness("stiffness entry below 1e-9 at step " +
                              std::to_string(t));
    const Vec2 d = critical_damping(kt);
    const Vec2 residual =
        d.cwise(vel[t]) + inertia.cwise(acc[t]) - demo.forces[t];
    attr[t] = demo.poses[t] + kt.cwise_inv().cwise(residual);
  }
  return attr;
}

Trajectory integrate_impedance(const SurfaceModel& surface,
                               const std::vector<Vec2>& stiffness,
                               const std::vector<Vec2>& attractors,
                               Vec2 pose0, Vec2 velocity0, double dt,
                               const Vec2& inertia) {
  const int h = static_cast<int>(attractors.size());
  Trajectory out;
  out.dt = dt;
  out.poses.reserve(h);
  out.velocities.reserve(h);
  out.attractors = attractors;
  out.forces.reserve(h);

  Vec2 x = pose0;
  Vec2 v = velocity0;
  const Vec2 inv_inertia = inertia.cwise_inv();

  for (int t = 0; t < h; ++t) {
    const Vec2& k = stiffness[static_cast<size_t>(t)];
    const Vec2 d = critical_damping(k);
    const Vec2 f_impedance =
        k.cwise(attractors[static_cast<size_t>(t)] - x) - d.cwise(v);

    const GapResult g = surface_gap(surface, x);
    Vec2 accel;
    Vec2 contact_force{0.0, 0.0};
    const bool active = g.gap <= kContactActivation;
    if (active) {
      ContactProblem problem;
      problem.actuated_force = f_impedance;
      problem.jacobian.rows = 2;
      problem.jacobian.normal = g.normal;
      problem.jacobian.tangent = {g.normal.z, -g.normal.x};
      problem.friction = surface.friction;
      const Vec2 tangent = problem.jacobian.tangent;
      const double vn = v.dot(g.normal);
      const double vt = v.dot(tangent);
      const Vec2 free_accel = inv_inertia.cwise(f_impedance);
      const double a_free_n = g.normal.dot(free_accel);
      const double a_free_t = tangent.dot(free_accel);
      // normal target: land on the surface at zero approach velocity
      const double ref_n = (-g.gap / dt - vn) / dt;
      // tangential target: stop sliding, but clamped to what the friction
      // cone can deliver. An unreachable target would make the constrained
      // minimizer inflate the normal force (the cone projection couples the
      // rows), which acts like restitution and bounces the end-effector.
      const double m_n = 1.0 / g.normal.dot(inv_inertia.cwise(g.normal));
      const double m_t = 1.0 / tangent.dot(inv_inertia.cwise(tangent));
      const double fn_est = std::max(0.0, m_n * (ref_n - a_free_n));
      const double cap = surface.friction * fn_est / m_t;
      const double ref_t =
          std::clamp(-vt / dt, a_free_t - cap, a_free_t + cap);
      problem.reference_accel = {ref_n, ref_t};
      const ContactSolution sol = solve_contact(problem, inertia);
      accel = sol.accel;
      contact_force = sol.contact_force;
    } else {
      accel = inv_inertia.cwise(f_impedance);
    }

    out.poses.push_back(x);
    out.velocities.push_back(v);
    out.forces.push_back(contact_force);

    v += accel * dt;
    Vec2 next = x + v * dt;
    const GapResult ng = surface_gap(surface, next);
    if (ng.gap < 0.0) {
      if (!active) {
        // free flight crossed the surface: stop at the crossing, let the
        // next step's contact solve absorb the approach velocity
        next = clip_to_surface(surface, x, next);
      } else if (ng.gap < -1e-3) {
        throw NonConvergence("contact step produced deep penetration");
      } else {
        next += ng.normal * (-ng.gap);
      }
    } else if (active && ng.gap <= 1e-5 &&
               contact_force.dot(ng.normal) > 1e-9) {
      // a pressing contact stepped along the tangent of a convex section;
      // the O(curvature * ds^2) lift is discretization error, not takeoff
      next -= ng.normal * ng.gap;
    }
    x = next;
  }
  return out;
}

Trajectory rollout(const SurfaceModel& surface,
                   const objectives::StiffnessSchedule& schedule,
                   const Trajectory& demo) {
  const std::vector<Vec2> k = schedule.expand();
  const std::vector<Vec2> attr = compute_attractor(demo, schedule);
  Trajectory out = integrate_impedance(surface, k, attr, demo.poses.at(0),
                                       demo.velocities.at(0), demo.dt);
  out.meta = {{"surface", surface.to_json()}, {"schedule", schedule.to_json()}};
  return out;
}

Trajectory generate_demo(const SurfaceModel& surface, DemoKind kind,
                         const DemoParams& params, uint64_t seed) {
  Rng rng(seed);
  auto jittered = [&](double v) {
    return v * (1.0 + params.jitter * (2.0 * rng.uniform() - 1.0));
  };
  const int h = params.horizon;
  const double dt = params.dt;
  const double speed = jittered(params.speed);
  const double f_base = jittered(params.force_base);
  const double f_amp = jittered(params.force_amplitude);
  const double k_demo = jittered(params.stiffness);
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  const double total = h * dt;

  // Attractor path: tangential motion per kind; normal pressed below the
  // surface by depth = f_target / k so the spring realizes the target force.
  std::vector<double> ax(static_cast<size_t>(h)), f_target(static_cast<size_t>(h));
  for (int t = 0; t < h; ++t) {
    const double tau = t * dt;
    const double ramp_u = std::min(1.0, tau / (0.1 * total));
    const double ramp = ramp_u * ramp_u * (3.0 - 2.0 * ramp_u);
    double x = params.start_x;
    double f = f_base;
    switch (kind) {
      case DemoKind::kLine:
        x += speed * tau * ramp;
        break;
      case DemoKind::kWavelike:
        x += speed * tau * ramp;
        f += ramp * f_amp * std::sin(2.0 * kPi * 1.5 * tau / total + phase);
        break;
      case DemoKind::kSpiralAnalog: {
        // back-and-forth sweep with growing amplitude, the planar analog of
        // an opening spiral wipe
        const double amp = (0.25 + 0.75 * tau / total) * speed * total * 0.5;
        x += amp * std::sin(2.0 * kPi * 1.25 * tau / total + phase) * ramp;
        f += 0.3 * f_amp * std::sin(2.0 * kPi * 0.5 * tau / total);
        break;
      }
    }
    ax[static_cast<size_t>(t)] = x;
    f_target[static_cast<size_t>(t)] = f;
  }

  // The end-effector trails the attractor by roughly (D v + mu f)/k, so on
  // curved surfaces the press depth is measured at the lag-compensated x.
  // Still open loop: everything is derived from the planned path.
  std::vector<Vec2> attractors(static_cast<size_t>(h));
  std::vector<Vec2> stiffness(static_cast<size_t>(h), Vec2{k_demo, k_demo});
  const double d_demo = 2.0 * std::sqrt(k_demo);
  for (int t = 0; t < h; ++t) {
    const size_t i = static_cast<size_t>(t);
    const double vx = (t == 0 || t == h - 1)
                          ? 0.0
                          : (ax[i + 1] - ax[i - 1]) / (2.0 * dt);
    const double drag = (vx >= 0 ? 1.0 : -1.0) * surface.friction * f_target[i];
    const double lag = (d_demo * vx + drag) / k_demo;
    const double ee_x = ax[i] - lag;
    attractors[i] = {ax[i], surface.height(ee_x) - f_target[i] / k_demo};
  }

  const Vec2 start_pose{params.start_x, surface.height(params.start_x)};
  Trajectory demo = integrate_impedance(surface, stiffness, attractors,
                                        start_pose, Vec2{0.0, 0.0}, dt);

  int lost = 0;
  for (const Vec2& f : demo.forces)
    if (f.norm() == 0.0) ++lost;
  if (lost > h / 10)
    throw DemoFailure("contact lost for " + std::to_string(lost) + "/" +
                      std::to_string(h) + " steps");

  demo.meta = {{"surface", surface.to_json()},
               {"demo_kind", to_string(kind)},
               {"seed", seed},
               {"schedule",
                objectives::StiffnessSchedule::constant(h, {k_demo, k_demo})
                    .to_json()}};
  return demo;
}

}  // namespace stiffdiff::sim
