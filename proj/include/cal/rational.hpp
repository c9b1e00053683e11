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

#pragma once

#include <cstdint>
#include <string>

#include <boost/rational.hpp>
#include <json.hpp>

namespace cal {

using Rational = boost::rational<std::int64_t>;

/// Rounds half-up (towards +infinity on ties) to `decimals` places.
std::string format_decimal(const Rational& value, int decimals);

/// 3/8 -> "37.5%" at one decimal.
std::string format_percent(const Rational& value, int decimals = 1);

/// {"num": n, "den": d, "value": double}
nlohmann::json to_json(const Rational& value);

}  // namespace cal
