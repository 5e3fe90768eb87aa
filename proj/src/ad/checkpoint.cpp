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

#include "stiffdiff/ad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

#include "stiffdiff/util/io.hpp"

namespace stiffdiff::ad {

namespace {

constexpr char kMagic[] = "SDTENSOR";
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  const uint64_t v = std::bit_cast<uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  uint32_t u32() {
    require(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    require(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::string str(size_t n) {
    require(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void require(size_t n) {
    if (pos_ + n > bytes_.size())
      throw std::runtime_error("truncated checkpoint");
  }
  const std::string& bytes_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const ParamMap& params) {
  std::string out;
  out.append(kMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.append(name);
    put_u32(out, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
    for (double v : t.value) put_f64(out, v);
  }
  write_file_atomic(path, out);
}

ParamMap load_checkpoint(const std::string& path) {
  const std::string bytes = read_file(path);
  Reader r(bytes);
  if (r.str(8) != std::string(kMagic, 8))
    throw std::runtime_error("not a checkpoint file: " + path);
  if (r.u32() != kVersion)
    throw std::runtime_error("unsupported checkpoint version: " + path);
  const uint32_t count = r.u32();
  ParamMap params;
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.u32());
    const uint32_t rank = r.u32();
    Shape shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(r.u32());
    Tensor t(shape, /*requires_grad=*/true);
    for (auto& v : t.value) v = r.f64();
    params.emplace(name, std::move(t));
  }
  return params;
}

}  // namespace stiffdiff::ad
