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

#include <algorithm>
#include <functional>
#include <optional>

#include "cal/config.hpp"
#include "cal/errors.hpp"
#include "cal/rules.hpp"

namespace cal {

namespace {

constexpr std::size_t kMaxAnalysedStates = 1 << 16;

void collect_outcomes(const WizardNode& node, const std::string& path,
                      std::vector<std::pair<std::string, std::string>>& out) {
  if (node.is_outcome()) {
    out.emplace_back(path, node.outcome().option_id);
    return;
  }
  collect_outcomes(*node.question().yes, path + ".yes", out);
  collect_outcomes(*node.question().no, path + ".no", out);
}

// Every value a category can hold, including "nothing selected".
std::vector<std::optional<SelectedValue>> candidate_values(const Category& category) {
  std::vector<std::optional<SelectedValue>> values{std::nullopt};
  switch (category.kind) {
    case CategoryKind::single:
      for (const auto& o : category.options) values.emplace_back(SingleValue{o.id});
      break;
    case CategoryKind::multi: {
      const std::size_t n = std::min<std::size_t>(category.options.size(), 16);
      for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
        MultiValue v;
        for (std::size_t i = 0; i < n; ++i) {
          if (mask & (std::size_t{1} << i)) v.option_ids.insert(category.options[i].id);
        }
        values.emplace_back(std::move(v));
      }
      break;
    }
    case CategoryKind::text:
      values.emplace_back(TextValue{"x"});
      break;
  }
  return values;
}

// Calls fn(selections, ctx) for every combination of values of the
// categories other than `skip`, in every context of the code set's scope.
// Returns false without calling fn when there are too many combinations.
template <typename Fn>
bool for_each_state(const CodeSetConfig& config, std::string_view skip, Fn&& fn) {
  std::vector<const Category*> others;
  std::vector<std::vector<std::optional<SelectedValue>>> domains;
  std::size_t total = 1;
  for (const auto& c : config.categories) {
    if (c.id == skip) continue;
    others.push_back(&c);
    domains.push_back(candidate_values(c));
    total = total > kMaxAnalysedStates ? total : total * domains.back().size();
  }
  if (total > kMaxAnalysedStates) return false;

  std::vector<ExampleContext> contexts;
  if (config.scope == Scope::conversation) {
    contexts.push_back({Scope::conversation, Speaker::human});
  } else {
    contexts.push_back({Scope::utterance, Speaker::human});
    contexts.push_back({Scope::utterance, Speaker::bot});
  }

  std::vector<std::size_t> digits(others.size(), 0);
  for (std::size_t state = 0; state < total; ++state) {
    SelectionSet selections;
    for (std::size_t i = 0; i < others.size(); ++i) {
      if (const auto& v = domains[i][digits[i]]) {
        selections.emplace(others[i]->id, Selection{*v, Origin::manual});
      }
    }
    for (const auto& ctx : contexts) fn(selections, ctx);
    for (std::size_t i = 0; i < digits.size(); ++i) {
      if (++digits[i] < domains[i].size()) break;
      digits[i] = 0;
    }
  }
  return true;
}

std::string describe_state(const SelectionSet& selections, ExampleContext ctx) {
  std::string out;
  for (const auto& [category_id, selection] : selections) {
    if (!out.empty()) out += ", ";
    out += category_id + "=";
    if (const auto* text = std::get_if<TextValue>(&selection.value)) {
      out += "'" + text->text + "'";
      continue;
    }
    const auto ids = option_ids(selection.value);
    for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? "+" : "") + ids[i];
  }
  if (out.empty()) out = "nothing selected";
  if (ctx.scope == Scope::utterance) out += std::string(" (") + std::string(to_string(ctx.speaker)) + ")";
  return out;
}

}  // namespace

ValidationReport detect_rule_contradictions(const CodeSetConfig& config) {
  ValidationReport report;
  if (config.rules.empty()) return report;
  std::optional<std::string> witness;
  const bool complete = for_each_state(config, {}, [&](const SelectionSet& s, ExampleContext ctx) {
    if (witness) return;
    try {
      resolve(config, s, ctx);
    } catch (const ContradictionError& e) {
      witness = describe_state(s, ctx) + ": " + e.what();
    }
  });
  if (!complete) {
    report.warn("$.rules", "too many selection states to check the rules for contradictions");
  } else if (witness) {
    report.warn("$.rules", "rules contradict each other when " + *witness);
  }
  return report;
}

ValidationReport detect_wizard_conflicts(const CodeSetConfig& config) {
  ValidationReport report;
  for (const auto& [category_id, flow] : config.wizards) {
    const std::string path = "$.wizards." + category_id + ".root";
    const int depth = wizard_depth(*flow.root);
    if (depth > kMaxWizardDepth) {
      report.error(path, "wizard depth " + std::to_string(depth) + " exceeds the limit of " +
                             std::to_string(kMaxWizardDepth));
      continue;
    }

    std::vector<std::pair<std::string, std::string>> outcomes;
    collect_outcomes(*flow.root, path, outcomes);
    // For each outcome leaf: was it enabled in at least one state where the
    // category was visible?
    std::vector<bool> ever_enabled(outcomes.size(), false);
    bool ever_visible = false;

    const bool complete =
        for_each_state(config, category_id, [&](const SelectionSet& s, ExampleContext ctx) {
          try {
            const auto state = effective_state(config, s, ctx);
            if (!state.is_visible(category_id)) return;
            ever_visible = true;
            for (std::size_t k = 0; k < outcomes.size(); ++k) {
              if (!state.is_disabled(category_id, outcomes[k].second)) ever_enabled[k] = true;
            }
          } catch (const ContradictionError&) {
            // Not a reachable state.
          }
        });
    if (!complete) {
      report.warn(path, "too many selection states to check wizard outcomes against rules");
      continue;
    }
    if (!ever_visible) {
      report.warn(path, "category '" + category_id + "' is hidden in every reachable state");
      continue;
    }
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      if (!ever_enabled[k]) {
        report.warn(outcomes[k].first + ".outcome",
                    "outcome '" + outcomes[k].second + "' is disabled by rules in every reachable state");
      }
    }
  }
  return report;
}

}  // namespace cal
