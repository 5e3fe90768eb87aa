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
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace stiffdiff {

// Comma separation, one header row, '.' decimal, LF endings. Leading '#'
// lines carry run metadata (e.g. a timestamp); readers and byte-level
// comparisons treat them as non-payload.
class CsvBuilder {
 public:
  explicit CsvBuilder(std::vector<std::string> columns, int precision = 12)
      : columns_(std::move(columns)), precision_(precision) {}

  void comment(const std::string& line) { comments_.push_back(line); }

  CsvBuilder& cell(const std::string& v) {
    if (col_) rows_ << ',';
    rows_ << v;
    ++col_;
    return *this;
  }
  CsvBuilder& cell(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", precision_, v);
    return cell(std::string(buf));
  }
  CsvBuilder& cell(int64_t v) { return cell(std::to_string(v)); }
  CsvBuilder& cell(uint64_t v) { return cell(std::to_string(v)); }
  CsvBuilder& cell(int v) { return cell(std::to_string(v)); }
  void end_row() {
    rows_ << '\n';
    col_ = 0;
  }

  std::string str() const {
    std::ostringstream out;
    for (const auto& c : comments_) out << "# " << c << '\n';
    for (size_t i = 0; i < columns_.size(); ++i) {
      if (i) out << ',';
      out << columns_[i];
    }
    out << '\n' << rows_.str();
    return out.str();
  }

 private:
  std::vector<std::string> columns_;
  int precision_;
  std::vector<std::string> comments_;
  std::ostringstream rows_;
  size_t col_ = 0;
};

// Minimal reader for our own CSV output: skips '#' lines, splits on commas.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace stiffdiff
