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

#include "stiffdiff/sim/contact.hpp"

#include <algorithm>
#include <cmath>

namespace stiffdiff::sim {

namespace {

constexpr int kMaxIterations = 200;
constexpr double kRelTolerance = 1e-10;

struct ConeForce {
  double fn = 0.0;
  double ft = 0.0;
};

// Euclidean projection onto the planar Coulomb cone {f_n >= 0, |f_t| <= mu f_n}.

ConeForce project(ConeForce f, double mu) {
  const double t = std::abs(f.ft);
  if (t <= mu * f.fn) return f;                       // inside
  if (mu * t <= -f.fn) return {0.0, 0.0};             // polar cone
  const double c = (f.fn + mu * t) / (1.0 + mu * mu); // boundary ray
  return {c, (f.ft >= 0 ? 1.0 : -1.0) * mu * c};
}

}  // namespace

ContactSolution solve_contact(const ContactProblem& problem, const Vec2& inertia) {
  const Vec2 inv_inertia = inertia.cwise_inv();
  ContactSolution out;
  if (problem.jacobian.rows == 0) {
    out.accel = inv_inertia.cwise(problem.actuated_force);
    out.contact_force = {0.0, 0.0};
    return out;
  }

  const Vec2 n = problem.jacobian.normal;
  const Vec2 t = problem.jacobian.tangent;
  const bool has_tangent = problem.jacobian.rows >= 2;
  const double mu = has_tangent ? problem.friction : 0.0;

  // A = J Lambda^{-1} J^T in the (normal, tangent) frame.
  const Vec2 lin = inv_inertia.cwise(n);
  const Vec2 lit = inv_inertia.cwise(t);
  const double ann = n.dot(lin);
  const double ant = has_tangent ? t.dot(lin) : 0.0;
  const double att = has_tangent ? t.dot(lit) : 0.0;

  const Vec2 free_accel = inv_inertia.cwise(problem.actuated_force);
  const double free_n = n.dot(free_accel);
  const double free_t = has_tangent ? t.dot(free_accel) : 0.0;
  const double ref_n = problem.reference_accel.x;
  const double ref_t = problem.reference_accel.z;
  const double rn = problem.regularizer.x;
  const double rt = problem.regularizer.z;

  // objective and gradient in force coordinates f=(fn, ft):
  //   Q(f) = f^T A f + e^T R^{-1} e,  e = a_free + A f - a_ref
  auto objective = [&](const ConeForce& f) {
    const double en = free_n + ann * f.fn + ant * f.ft - ref_n;
    const double et = free_t + ant * f.fn + att * f.ft - ref_t;
    const double quad = ann * f.fn * f.fn + 2.0 * ant * f.fn * f.ft + att * f.ft * f.ft;
    return quad + en * en / rn + (has_tangent ? et * et / rt : 0.0);
  };
  auto gradient = [&](const ConeForce& f) {
    const double en = free_n + ann * f.fn + ant * f.ft - ref_n;
    const double et = free_t + ant * f.fn + att * f.ft - ref_t;
    ConeForce g;
    g.fn = 2.0 * (ann * f.fn + ant * f.ft) + 2.0 * (ann * en / rn + ant * et / rt);
    g.ft = 2.0 * (ant * f.fn + att * f.ft) + 2.0 * (ant * en / rn + att * et / rt);
    if (!has_tangent) g.ft = 0.0;
    return g;
  };

  // Lipschitz bound: lmax(2A + 2A R^{-1} A) <= 2 lmax(A) (1 + lmax(A)/rmin).
  const double tr = ann + att;
  const double det = ann * att - ant * ant;
  const double lmax_a =
      has_tangent ? 0.5 * (tr + std::sqrt(std::max(0.0, tr * tr - 4.0 * det)))
                  : ann;
  const double lip = 2.0 * lmax_a * (1.0 + lmax_a / std::min(rn, rt));
  const double step = 1.0 / lip;

  ConeForce f{0.0, 0.0};
  double q = objective(f);
  int it = 0;
  bool converged = false;
  for (; it < kMaxIterations; ++it) {
    const ConeForce g = gradient(f);
    ConeForce next{f.fn - step * g.fn, f.ft - step * g.ft};
    next = project(next, mu);
    const double qn = objective(next);
    const double decrease = q - qn;
    f = next;
    const bool done = decrease <= kRelTolerance * (1.0 + std::abs(q));
    q = qn;
    if (done) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged)
    throw NonConvergence("contact solve exceeded iteration cap");

  const Vec2 force = n * f.fn + (has_tangent ? t * f.ft : Vec2{0.0, 0.0});
  out.contact_force = force;
  out.accel = inv_inertia.cwise(problem.actuated_force + force);
  out.iterations = it;
  return out;
}

}  // namespace stiffdiff::sim
