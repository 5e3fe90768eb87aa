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
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace stiffdiff::ad {

using Shape = std::vector<int>;

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s);

struct ShapeMismatch : std::runtime_error {
  ShapeMismatch(const std::string& op, const Shape& a, const Shape& b)
      : std::runtime_error("shape mismatch in " + op + ": " + shape_str(a) +
                           " vs " + shape_str(b)) {}
};

struct DisconnectedGraph : std::runtime_error {
  explicit DisconnectedGraph(const std::string& name)
      : std::runtime_error("parameter does not influence the loss: " + name) {}
};

// Dense 64-bit float buffer with a gradient slot. Rank is at most 2 in
// practice; rank-1 shapes are treated as a single row.
struct Tensor {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // same length as value iff requires_grad

  Tensor() = default;
  explicit Tensor(Shape s, bool requires_grad = false) : shape(std::move(s)) {
    value.assign(static_cast<size_t>(numel(shape)), 0.0);
    if (requires_grad) grad.assign(value.size(), 0.0);
  }

  bool requires_grad() const { return !grad.empty(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

  int rows() const { return shape.size() == 2 ? shape[0] : 1; }
  int cols() const { return shape.empty() ? 0 : shape.back(); }
};

}  // namespace stiffdiff::ad
