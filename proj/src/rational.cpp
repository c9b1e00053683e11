// Copyright 2026 The CAL Authors
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

#include "cal/rational.hpp"

#include <cstdlib>

namespace cal {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::string format_decimal(const Rational& value, int decimals) {
  std::int64_t scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  // floor(value * scale + 1/2)
  const std::int64_t rounded =
      floor_div(2 * value.numerator() * scale + value.denominator(), 2 * value.denominator());
  const std::int64_t magnitude = std::llabs(rounded);
  std::string digits = std::to_string(magnitude / scale);
  if (decimals > 0) {
    std::string frac = std::to_string(magnitude % scale);
    digits += "." + std::string(static_cast<std::size_t>(decimals) - frac.size(), '0') + frac;
  }
  return rounded < 0 ? "-" + digits : digits;
}

std::string format_percent(const Rational& value, int decimals) {
  return format_decimal(value * Rational(100), decimals) + "%";
}

nlohmann::json to_json(const Rational& value) {
  return {{"num", value.numerator()},
          {"den", value.denominator()},
          {"value", boost::rational_cast<double>(value)}};
}

}  // namespace cal
