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

#include <map>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cal/config.hpp"

namespace cal {

struct SingleValue {
  std::string option_id;
  friend bool operator==(const SingleValue&, const SingleValue&) = default;
};

struct MultiValue {
  std::set<std::string> option_ids;
  friend bool operator==(const MultiValue&, const MultiValue&) = default;
};

struct TextValue {
  std::string text;
  friend bool operator==(const TextValue&, const TextValue&) = default;
};

using SelectedValue = std::variant<SingleValue, MultiValue, TextValue>;

enum class Origin { manual, auto_rule, auto_wizard };

std::string_view to_string(Origin origin);
Origin origin_from_string(std::string_view text);

struct Selection {
  SelectedValue value;
  Origin origin = Origin::manual;
  friend bool operator==(const Selection&, const Selection&) = default;
};

/// Keyed by category id.
using SelectionSet = std::map<std::string, Selection>;

/// (category id, option id)
using OptionRef = std::pair<std::string, std::string>;

struct ExampleContext {
  Scope scope = Scope::utterance;
  Speaker speaker = Speaker::human;
};

struct EffectiveLabelState {
  std::vector<std::string> visible_categories;
  std::set<OptionRef> disabled_options;
  std::set<OptionRef> auto_selected;
  bool complete = false;
  /// Most rounds that changed the fired set in any one fixed-point run;
  /// cleaning reruns start a new run.
  int passes = 0;

  bool is_visible(std::string_view category_id) const;
  bool is_disabled(std::string_view category_id, std::string_view option_id) const;

  friend bool operator==(const EffectiveLabelState& a, const EffectiveLabelState& b) {
    return a.visible_categories == b.visible_categories &&
           a.disabled_options == b.disabled_options && a.auto_selected == b.auto_selected &&
           a.complete == b.complete;
  }
};

/// A selection set after rule resolution together with its derived state.
struct Resolution {
  SelectionSet selections;
  EffectiveLabelState state;
};

bool contains_option(const SelectedValue& value, std::string_view option_id);
std::vector<std::string> option_ids(const SelectedValue& value);

/// Decodes a request value for `category`: a string for single and text
/// kinds, an array of strings (or a single string) for multi.
SelectedValue value_from_json(const Category& category, const nlohmann::json& doc);
nlohmann::json value_to_json(const SelectedValue& value);

/// Categories shown for an example before any HideCategory effect, in
/// configuration order. Speaker filters only apply at utterance scope.
std::vector<std::string> applicable_categories(const CodeSetConfig& code_set, ExampleContext ctx);

/// Runs the dependency rules to a fixed point from the manual and wizard
/// entries of `selections`; incoming auto_rule entries are ignored and
/// recomputed. Manual entries landing in a hidden category or on a disabled
/// option are dropped. Throws ContradictionError when the rules oscillate,
/// auto-select a disabled option, or auto-select two options of a single
/// category.
Resolution resolve(const CodeSetConfig& code_set, const SelectionSet& selections,
                   ExampleContext ctx);

EffectiveLabelState effective_state(const CodeSetConfig& code_set, const SelectionSet& selections,
                                    ExampleContext ctx);

/// Selects (or deselects) `value` in `category_id` and re-resolves.
/// Deselecting something that is not a stored entry is a no-op.
Resolution apply_selection(const CodeSetConfig& code_set, const SelectionSet& selections,
                           ExampleContext ctx, const std::string& category_id,
                           const SelectedValue& value, bool selected,
                           Origin origin = Origin::manual);

bool check_complete(const CodeSetConfig& code_set, const SelectionSet& selections,
                    ExampleContext ctx);

nlohmann::json to_json(const EffectiveLabelState& state);
nlohmann::json to_json(const SelectionSet& selections);

}  // namespace cal
