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
#include <map>
#include <string>

#include "stiffdiff/ad/tensor.hpp"

namespace stiffdiff::ad {

using ParamMap = std::map<std::string, Tensor>;

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
  int64_t step = 0;
};

// Standard bias-corrected Adam over Tensor::grad. Iteration order is the
// map's key order, so updates are deterministic.
void adam_step(ParamMap& params, AdamState& state, const AdamConfig& cfg);

void zero_grads(ParamMap& params);

}  // namespace stiffdiff::ad
