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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cal/errors.hpp"

namespace cal {

enum class CategoryKind { single, multi, text };
enum class SpeakerFilter { any, human, bot };
enum class Speaker { human, bot };
enum class Scope { utterance, conversation };
enum class AgreementVisibility { creator_only, all };

std::string_view to_string(CategoryKind kind);
std::string_view to_string(SpeakerFilter filter);
std::string_view to_string(Speaker speaker);
std::string_view to_string(Scope scope);
std::string_view to_string(AgreementVisibility visibility);

std::optional<Speaker> parse_speaker(std::string_view text);

/// Deepest permitted wizard tree, counted in questions from root to leaf.
inline constexpr int kMaxWizardDepth = 32;
/// Longest permitted wizard question, in bytes.
inline constexpr std::size_t kMaxQuestionLength = 500;

struct LabelOption {
  std::string id;
  std::string display;
  std::optional<std::string> definition;
};

struct Category {
  std::string id;
  std::string name;
  CategoryKind kind = CategoryKind::single;
  std::vector<LabelOption> options;
  std::string definition;
  std::vector<std::string> examples;
  SpeakerFilter speaker_filter = SpeakerFilter::any;

  const LabelOption* find_option(std::string_view option_id) const;
  bool has_option(std::string_view option_id) const { return find_option(option_id) != nullptr; }
};

struct Trigger {
  std::string category_id;
  std::string option_id;
  /// true: fires while the option is selected; false: while it is not.
  bool selected = true;
};

enum class EffectKind { disable_option, auto_select, hide_category };

std::string_view to_string(EffectKind kind);

struct Effect {
  EffectKind kind = EffectKind::disable_option;
  std::string category_id;
  std::string option_id;  // empty for hide_category
};

struct DependencyRule {
  Trigger trigger;
  std::vector<Effect> effects;
};

struct WizardNode;
using WizardNodePtr = std::shared_ptr<const WizardNode>;

struct WizardQuestion {
  std::string text;
  WizardNodePtr yes;
  WizardNodePtr no;
};

struct WizardOutcome {
  std::string option_id;
};

struct WizardNode {
  std::variant<WizardQuestion, WizardOutcome> body;

  bool is_outcome() const { return std::holds_alternative<WizardOutcome>(body); }
  const WizardQuestion& question() const { return std::get<WizardQuestion>(body); }
  const WizardOutcome& outcome() const { return std::get<WizardOutcome>(body); }
};

struct WizardFlow {
  std::string category_id;
  WizardNodePtr root;
};

/// Number of questions on the longest root-to-leaf path.
int wizard_depth(const WizardNode& node);

struct CodeSetConfig {
  std::string id;
  std::string name;
  Scope scope = Scope::utterance;
  std::vector<Category> categories;
  std::vector<DependencyRule> rules;
  std::map<std::string, WizardFlow> wizards;

  const Category* find_category(std::string_view category_id) const;
  const WizardFlow* find_wizard(std::string_view category_id) const;
};

struct ProjectConfig {
  std::string id;
  std::string name;
  std::vector<std::string> annotators;
  std::vector<CodeSetConfig> code_sets;
  std::string data_ref;
  AgreementVisibility agreement_visibility = AgreementVisibility::creator_only;

  const CodeSetConfig* code_set_for(Scope scope) const;
  bool is_annotator(std::string_view annotator_id) const;
};

struct Finding {
  std::string path;
  std::string message;

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct ValidationReport {
  std::vector<Finding> errors;
  std::vector<Finding> warnings;

  bool accepted() const { return errors.empty(); }
  void error(std::string path, std::string message);
  void warn(std::string path, std::string message);
  /// Appends `other`, prefixing each path's leading `$` with `prefix`.
  void merge(const ValidationReport& other, std::string_view prefix = {});
};

/// A configuration that parsed but failed validation.
class InvalidConfigError : public SchemaError {
 public:
  explicit InvalidConfigError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Strict parse: unknown keys and mistyped fields raise SchemaError with the
/// JSON path of the offending element. Malformed JSON raises SyntaxError.
CodeSetConfig parse_code_set(std::string_view text);
CodeSetConfig code_set_from_json(const nlohmann::json& doc, const std::string& path = "$");
nlohmann::json to_json(const CodeSetConfig& config);

/// Parses a project and enforces its structural invariants (non-empty unique
/// annotators, at most one code set per scope, at least one utterance-scope
/// code set). Nested code sets are parsed but not validated.
ProjectConfig parse_project(std::string_view text);
ProjectConfig project_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ProjectConfig& config);

/// Reports every broken reference and structural invariant in document order.
ValidationReport validate_code_set(const CodeSetConfig& config);

/// Runs validate_code_set, then detect_wizard_conflicts and
/// detect_rule_contradictions, on every code set.
ValidationReport validate_project(const ProjectConfig& config);

/// Flags wizard outcomes that no reachable selection state leaves enabled,
/// and trees deeper than kMaxWizardDepth. Assumes validate_code_set passed.
ValidationReport detect_wizard_conflicts(const CodeSetConfig& config);

/// Warns when some combination of selections drives the rules into a
/// contradiction (oscillation, or two auto-selected options of one
/// single-choice category). Assumes validate_code_set passed.
ValidationReport detect_rule_contradictions(const CodeSetConfig& config);

/// Project ids double as directory names.
bool is_safe_identifier(std::string_view id);

}  // namespace cal
