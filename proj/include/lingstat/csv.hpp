// Copyright 2026 The lingstat Authors.
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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace lingstat {

// Shortest text that parses back to the same double; whole numbers below
// 2^53 print without an exponent.
inline std::string format_number(double v) {
  if (v == std::trunc(v) && std::fabs(v) < 0x1p53) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// Minimal RFC 4180 writer: fields with commas, quotes or newlines are
// quoted. Rows end in a bare '\n' on every platform.
class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string_view> header) {
    for (auto h : header) header_.emplace_back(h);
    write_row(header_);
  }

  std::size_t columns() const { return header_.size(); }

  template <typename... Ts>
  CsvWriter& row(const Ts&... fields) {
    static_assert(sizeof...(Ts) > 0);
    std::vector<std::string> cells{cell(fields)...};
    write_row(cells);
    return *this;
  }

  const std::string& str() const { return out_; }

 private:
  template <typename T>
  static std::string cell(const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
      return format_number(static_cast<double>(v));
    } else if constexpr (std::is_integral_v<T>) {
      return std::to_string(v);
    } else {
      return std::string(std::string_view(v));
    }
  }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ',';
      const auto& c = cells[i];
      if (c.find_first_of(",\"\n\r") == std::string::npos) {
        out_ += c;
        continue;
      }
      out_ += '"';
      for (char ch : c) {
        if (ch == '"') out_ += '"';
        out_ += ch;
      }
      out_ += '"';
    }
    out_ += '\n';
  }

  std::vector<std::string> header_;
  std::string out_;
};

}  // namespace lingstat
