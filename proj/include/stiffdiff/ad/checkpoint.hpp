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

#include "stiffdiff/ad/adam.hpp"

namespace stiffdiff::ad {

// Versioned binary container for named arrays:
//   magic "SDTENSOR" | u32 version | u32 count
//   per array: u32 name_len | name bytes | u32 rank | u32 dims... | f64 data
// All integers and floats little-endian regardless of host.
void save_checkpoint(const std::string& path, const ParamMap& params);
ParamMap load_checkpoint(const std::string& path);  // arrays get grad slots

}  // namespace stiffdiff::ad
