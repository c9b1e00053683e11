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

#include "cal/rules.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "cal/errors.hpp"

namespace cal {

using nlohmann::json;

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::manual: return "manual";
    case Origin::auto_rule: return "auto_rule";
    case Origin::auto_wizard: return "auto_wizard";
  }
  return "manual";
}

Origin origin_from_string(std::string_view text) {
  if (text == "manual") return Origin::manual;
  if (text == "auto_rule") return Origin::auto_rule;
  if (text == "auto_wizard") return Origin::auto_wizard;
  throw FormatError("unknown origin '" + std::string(text) + "'");
}

bool EffectiveLabelState::is_visible(std::string_view category_id) const {
  return std::find(visible_categories.begin(), visible_categories.end(), category_id) !=
         visible_categories.end();
}

bool EffectiveLabelState::is_disabled(std::string_view category_id,
                                      std::string_view option_id) const {
  return disabled_options.count({std::string(category_id), std::string(option_id)}) > 0;
}

bool contains_option(const SelectedValue& value, std::string_view option_id) {
  if (const auto* single = std::get_if<SingleValue>(&value)) return single->option_id == option_id;
  if (const auto* multi = std::get_if<MultiValue>(&value)) {
    return multi->option_ids.count(std::string(option_id)) > 0;
  }
  return false;
}

std::vector<std::string> option_ids(const SelectedValue& value) {
  if (const auto* single = std::get_if<SingleValue>(&value)) return {single->option_id};
  if (const auto* multi = std::get_if<MultiValue>(&value)) {
    return {multi->option_ids.begin(), multi->option_ids.end()};
  }
  return {};
}

SelectedValue value_from_json(const Category& category, const json& doc) {
  auto require_option = [&](const std::string& option_id) {
    if (!category.has_option(option_id)) {
      throw NotFoundError(ErrorCode::unknown_option, "unknown option '" + option_id +
                                                         "' in category '" + category.id + "'");
    }
  };
  switch (category.kind) {
    case CategoryKind::single:
      if (!doc.is_string()) throw ValidationError("single-choice value must be a string");
      require_option(doc.get<std::string>());
      return SingleValue{doc.get<std::string>()};
    case CategoryKind::multi: {
      MultiValue multi;
      if (doc.is_string()) {
        multi.option_ids.insert(doc.get<std::string>());
      } else if (doc.is_array()) {
        for (const auto& item : doc) {
          if (!item.is_string()) throw ValidationError("multi-choice values must be strings");
          multi.option_ids.insert(item.get<std::string>());
        }
      } else {
        throw ValidationError("multi-choice value must be a string or array of strings");
      }
      if (multi.option_ids.empty()) throw ValidationError("multi-choice value is empty");
      for (const auto& id : multi.option_ids) require_option(id);
      return multi;
    }
    case CategoryKind::text:
      if (!doc.is_string()) throw ValidationError("text value must be a string");
      return TextValue{doc.get<std::string>()};
  }
  throw ValidationError("unsupported category kind");
}

json value_to_json(const SelectedValue& value) {
  if (const auto* single = std::get_if<SingleValue>(&value)) return single->option_id;
  if (const auto* multi = std::get_if<MultiValue>(&value)) return multi->option_ids;
  return std::get<TextValue>(value).text;
}

std::vector<std::string> applicable_categories(const CodeSetConfig& code_set, ExampleContext ctx) {
  std::vector<std::string> ids;
  if (code_set.scope != ctx.scope) return ids;
  for (const auto& category : code_set.categories) {
    bool admitted = ctx.scope == Scope::conversation ||
                    category.speaker_filter == SpeakerFilter::any ||
                    (category.speaker_filter == SpeakerFilter::human && ctx.speaker == Speaker::human) ||
                    (category.speaker_filter == SpeakerFilter::bot && ctx.speaker == Speaker::bot);
    if (admitted) ids.push_back(category.id);
  }
  return ids;
}

namespace {

bool kind_matches(const Category& category, const SelectedValue& value) {
  switch (category.kind) {
    case CategoryKind::single: return std::holds_alternative<SingleValue>(value);
    case CategoryKind::multi: return std::holds_alternative<MultiValue>(value);
    case CategoryKind::text: return std::holds_alternative<TextValue>(value);
  }
  return false;
}

bool has_content(const SelectedValue& value) {
  if (const auto* text = std::get_if<TextValue>(&value)) {
    return std::any_of(text->text.begin(), text->text.end(),
                       [](unsigned char c) { return !std::isspace(c); });
  }
  if (const auto* multi = std::get_if<MultiValue>(&value)) return !multi->option_ids.empty();
  return true;
}

struct CompiledEffect {
  EffectKind kind;
  int category;
  std::string option_id;
};

struct CompiledRule {
  int trigger_category;
  std::string trigger_option;
  bool selected;
  std::vector<CompiledEffect> effects;
};

// Rules keyed by category index, built once per resolution.
struct RuleIndex {
  std::vector<CompiledRule> rules;
  std::vector<std::vector<int>> by_trigger;

  explicit RuleIndex(const CodeSetConfig& code_set) : by_trigger(code_set.categories.size()) {
    auto index_of = [&](const std::string& id) {
      for (std::size_t i = 0; i < code_set.categories.size(); ++i) {
        if (code_set.categories[i].id == id) return static_cast<int>(i);
      }
      return -1;
    };
    for (const auto& rule : code_set.rules) {
      CompiledRule compiled{index_of(rule.trigger.category_id), rule.trigger.option_id,
                            rule.trigger.selected, {}};
      if (compiled.trigger_category < 0) continue;
      for (const auto& effect : rule.effects) {
        int target = index_of(effect.category_id);
        if (target >= 0) compiled.effects.push_back({effect.kind, target, effect.option_id});
      }
      by_trigger[compiled.trigger_category].push_back(static_cast<int>(rules.size()));
      rules.push_back(std::move(compiled));
    }
  }
};

struct FixedPointResult {
  std::vector<bool> visible;
  std::set<OptionRef> disabled;
  // Auto-selected options for visible categories without a stored entry.
  std::map<int, std::set<std::string>> auto_options;
  int passes = 0;
};

// Simultaneous (Jacobi) rule evaluation: each round fires exactly the rules
// whose trigger holds under the previous round's view. Only rules whose
// trigger category changed view are re-evaluated.
FixedPointResult run_fixed_point(const CodeSetConfig& code_set, const RuleIndex& index,
                                 const std::vector<bool>& applicable,
                                 const std::vector<std::optional<std::set<std::string>>>& base) {
  const std::size_t n = code_set.categories.size();
  std::vector<bool> fired(index.rules.size(), false);
  std::vector<int> hide_count(n, 0);
  std::map<OptionRef, int> disable_count;
  std::vector<std::map<std::string, int>> auto_count(n);

  std::vector<bool> visible(n);
  std::vector<std::set<std::string>> view(n);
  auto compute_view = [&](std::size_t i) {
    bool vis = applicable[i] && hide_count[i] == 0;
    std::set<std::string> options;
    if (vis) {
      if (base[i]) {
        options = *base[i];
      } else {
        for (const auto& [option, count] : auto_count[i]) {
          if (count > 0) options.insert(option);
        }
      }
    }
    bool changed = vis != visible[i] || options != view[i];
    visible[i] = vis;
    view[i] = std::move(options);
    return changed;
  };

  std::set<int> dirty;
  for (std::size_t i = 0; i < n; ++i) {
    compute_view(i);
    dirty.insert(static_cast<int>(i));
  }

  std::set<std::vector<bool>> seen{fired};
  int passes = 0;
  while (!dirty.empty()) {
    std::vector<int> toggled;
    for (int category : dirty) {
      for (int r : index.by_trigger[category]) {
        const auto& rule = index.rules[r];
        bool holds = visible[category] &&
                     (view[category].count(rule.trigger_option) > 0) == rule.selected;
        if (holds != fired[r]) toggled.push_back(r);
      }
    }
    if (toggled.empty()) break;
    ++passes;

    std::set<int> touched;
    for (int r : toggled) {
      fired[r] = !fired[r];
      const int delta = fired[r] ? 1 : -1;
      for (const auto& effect : index.rules[r].effects) {
        switch (effect.kind) {
          case EffectKind::hide_category:
            hide_count[effect.category] += delta;
            break;
          case EffectKind::disable_option:
            disable_count[{code_set.categories[effect.category].id, effect.option_id}] += delta;
            break;
          case EffectKind::auto_select:
            auto_count[effect.category][effect.option_id] += delta;
            break;
        }
        touched.insert(effect.category);
      }
    }
    if (!seen.insert(fired).second) {
      throw ContradictionError("dependency rules do not converge for this selection");
    }
    dirty.clear();
    for (int category : touched) {
      if (compute_view(static_cast<std::size_t>(category))) dirty.insert(category);
    }
  }

  FixedPointResult result;
  result.visible = visible;
  result.passes = passes;
  for (const auto& [ref, count] : disable_count) {
    if (count <= 0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (code_set.categories[i].id == ref.first && visible[i]) result.disabled.insert(ref);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!visible[i] || base[i]) continue;
    std::set<std::string> options;
    for (const auto& [option, count] : auto_count[i]) {
      if (count > 0) options.insert(option);
    }
    if (!options.empty()) result.auto_options.emplace(static_cast<int>(i), std::move(options));
  }
  return result;
}

}  // namespace

Resolution resolve(const CodeSetConfig& code_set, const SelectionSet& selections,
                   ExampleContext ctx) {
  const std::size_t n = code_set.categories.size();
  const auto applicable_ids = applicable_categories(code_set, ctx);
  std::vector<bool> applicable(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    applicable[i] = std::find(applicable_ids.begin(), applicable_ids.end(),
                              code_set.categories[i].id) != applicable_ids.end();
  }

  SelectionSet base;
  for (const auto& [category_id, selection] : selections) {
    if (selection.origin == Origin::auto_rule) continue;
    const Category* category = code_set.find_category(category_id);
    if (category == nullptr) {
      throw NotFoundError(ErrorCode::unknown_category, "unknown category '" + category_id + "'");
    }
    if (!kind_matches(*category, selection.value)) {
      throw ValidationError("value kind does not match category '" + category_id + "'");
    }
    for (const auto& option : option_ids(selection.value)) {
      if (!category->has_option(option)) {
        throw NotFoundError(ErrorCode::unknown_option,
                            "unknown option '" + option + "' in category '" + category_id + "'");
      }
    }
    base.emplace(category_id, selection);
  }

  const RuleIndex index(code_set);
  FixedPointResult fp;
  int passes = 0;
  while (true) {
    std::vector<std::optional<std::set<std::string>>> base_options(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto it = base.find(code_set.categories[i].id);
      if (it != base.end()) {
        auto ids = option_ids(it->second.value);
        base_options[i] = std::set<std::string>(ids.begin(), ids.end());
      }
    }
    fp = run_fixed_point(code_set, index, applicable, base_options);
    passes = std::max(passes, fp.passes);

    // Drop stored entries that the fixed point hides or disables, then rerun.
    // Each rerun removes at least one stored option, so this loop is bounded.
    SelectionSet cleaned;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& id = code_set.categories[i].id;
      auto it = base.find(id);
      if (it == base.end() || !fp.visible[i]) continue;
      Selection selection = it->second;
      if (auto* single = std::get_if<SingleValue>(&selection.value)) {
        if (fp.disabled.count({id, single->option_id})) continue;
      } else if (auto* multi = std::get_if<MultiValue>(&selection.value)) {
        std::erase_if(multi->option_ids,
                      [&](const std::string& o) { return fp.disabled.count({id, o}) > 0; });
        if (multi->option_ids.empty()) continue;
      }
      cleaned.emplace(id, std::move(selection));
    }
    if (cleaned == base) break;
    base = std::move(cleaned);
  }

  Resolution out;
  out.selections = base;
  auto& state = out.state;
  state.disabled_options = fp.disabled;
  state.passes = passes;
  for (const auto& [category_index, options] : fp.auto_options) {
    const Category& category = code_set.categories[category_index];
    if (category.kind == CategoryKind::single && options.size() > 1) {
      throw ContradictionError("rules auto-select more than one option of single-choice category '" +
                               category.id + "'");
    }
    for (const auto& option : options) {
      if (fp.disabled.count({category.id, option})) {
        throw ContradictionError("rules auto-select disabled option (" + category.id + ", " +
                                 option + ")");
      }
      state.auto_selected.insert({category.id, option});
    }
    Selection selection;
    selection.origin = Origin::auto_rule;
    if (category.kind == CategoryKind::single) {
      selection.value = SingleValue{*options.begin()};
    } else {
      selection.value = MultiValue{options};
    }
    out.selections.emplace(category.id, std::move(selection));
  }

  state.complete = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!fp.visible[i]) continue;
    const auto& id = code_set.categories[i].id;
    state.visible_categories.push_back(id);
    auto it = out.selections.find(id);
    if (it == out.selections.end() || !has_content(it->second.value)) state.complete = false;
  }
  return out;
}

EffectiveLabelState effective_state(const CodeSetConfig& code_set, const SelectionSet& selections,
                                    ExampleContext ctx) {
  return resolve(code_set, selections, ctx).state;
}

bool check_complete(const CodeSetConfig& code_set, const SelectionSet& selections,
                    ExampleContext ctx) {
  return effective_state(code_set, selections, ctx).complete;
}

Resolution apply_selection(const CodeSetConfig& code_set, const SelectionSet& selections,
                           ExampleContext ctx, const std::string& category_id,
                           const SelectedValue& value, bool selected, Origin origin) {
  const Category* category = code_set.find_category(category_id);
  if (category == nullptr) {
    throw NotFoundError(ErrorCode::unknown_category, "unknown category '" + category_id + "'");
  }
  if (!kind_matches(*category, value)) {
    throw ValidationError("value kind does not match category '" + category_id + "'");
  }
  for (const auto& option : option_ids(value)) {
    if (!category->has_option(option)) {
      throw NotFoundError(ErrorCode::unknown_option,
                          "unknown option '" + option + "' in category '" + category_id + "'");
    }
  }

  const Resolution current = resolve(code_set, selections, ctx);
  if (!current.state.is_visible(category_id)) {
    throw HiddenCategoryError("category '" + category_id + "' is not shown for this example");
  }

  SelectionSet base;
  for (const auto& [id, selection] : current.selections) {
    if (selection.origin != Origin::auto_rule) base.emplace(id, selection);
  }

  auto existing = base.find(category_id);
  if (selected) {
    for (const auto& option : option_ids(value)) {
      if (current.state.is_disabled(category_id, option)) {
        throw DisabledOptionError("option (" + category_id + ", " + option +
                                  ") is disabled by the current selections");
      }
    }
    Selection next{value, origin};
    if (const auto* multi = std::get_if<MultiValue>(&value); multi && existing != base.end()) {
      auto merged = std::get<MultiValue>(existing->second.value);
      merged.option_ids.insert(multi->option_ids.begin(), multi->option_ids.end());
      next.value = std::move(merged);
    }
    base[category_id] = std::move(next);
  } else if (existing != base.end()) {
    if (const auto* single = std::get_if<SingleValue>(&value)) {
      if (std::get<SingleValue>(existing->second.value).option_id == single->option_id) {
        base.erase(existing);
      }
    } else if (const auto* multi = std::get_if<MultiValue>(&value)) {
      auto& held = std::get<MultiValue>(existing->second.value).option_ids;
      for (const auto& option : multi->option_ids) held.erase(option);
      if (held.empty()) base.erase(existing);
    } else {
      base.erase(existing);
    }
  }

  Resolution next = resolve(code_set, base, ctx);
  if (selected) {
    auto it = next.selections.find(category_id);
    bool kept = it != next.selections.end() && it->second.origin == origin;
    if (kept) {
      for (const auto& option : option_ids(value)) kept = kept && contains_option(it->second.value, option);
    }
    if (!kept) {
      throw ContradictionError("selecting (" + category_id +
                               ") triggers rules that remove the selection itself");
    }
  }
  return next;
}

json to_json(const EffectiveLabelState& state) {
  auto refs = [](const std::set<OptionRef>& set) {
    json out = json::array();
    for (const auto& [category, option] : set) {
      out.push_back({{"category_id", category}, {"option_id", option}});
    }
    return out;
  };
  return json{{"visible_categories", state.visible_categories},
              {"disabled_options", refs(state.disabled_options)},
              {"auto_selected", refs(state.auto_selected)},
              {"complete", state.complete}};
}

json to_json(const SelectionSet& selections) {
  json out = json::object();
  for (const auto& [category_id, selection] : selections) {
    out[category_id] = {{"value", value_to_json(selection.value)},
                        {"origin", to_string(selection.origin)}};
  }
  return out;
}

}  // namespace cal
