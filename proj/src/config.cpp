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

#include "cal/config.hpp"

#include <algorithm>
#include <set>
#include <tuple>
#include <utility>

#include "cal/errors.hpp"

namespace cal {

using nlohmann::json;

std::string_view to_string(CategoryKind kind) {
  switch (kind) {
    case CategoryKind::single: return "single";
    case CategoryKind::multi: return "multi";
    case CategoryKind::text: return "text";
  }
  return "single";
}

std::string_view to_string(SpeakerFilter filter) {
  switch (filter) {
    case SpeakerFilter::any: return "any";
    case SpeakerFilter::human: return "human";
    case SpeakerFilter::bot: return "bot";
  }
  return "any";
}

std::string_view to_string(Speaker speaker) {
  return speaker == Speaker::human ? "human" : "bot";
}

std::string_view to_string(Scope scope) {
  return scope == Scope::utterance ? "utterance" : "conversation";
}

std::string_view to_string(AgreementVisibility visibility) {
  return visibility == AgreementVisibility::all ? "all" : "creator_only";
}

std::string_view to_string(EffectKind kind) {
  switch (kind) {
    case EffectKind::disable_option: return "disable_option";
    case EffectKind::auto_select: return "auto_select";
    case EffectKind::hide_category: return "hide_category";
  }
  return "disable_option";
}

std::optional<Speaker> parse_speaker(std::string_view text) {
  if (text == "human") return Speaker::human;
  if (text == "bot") return Speaker::bot;
  return std::nullopt;
}

const LabelOption* Category::find_option(std::string_view option_id) const {
  for (const auto& option : options) {
    if (option.id == option_id) return &option;
  }
  return nullptr;
}

const Category* CodeSetConfig::find_category(std::string_view category_id) const {
  for (const auto& category : categories) {
    if (category.id == category_id) return &category;
  }
  return nullptr;
}

const WizardFlow* CodeSetConfig::find_wizard(std::string_view category_id) const {
  auto it = wizards.find(std::string(category_id));
  return it == wizards.end() ? nullptr : &it->second;
}

const CodeSetConfig* ProjectConfig::code_set_for(Scope scope) const {
  for (const auto& code_set : code_sets) {
    if (code_set.scope == scope) return &code_set;
  }
  return nullptr;
}

bool ProjectConfig::is_annotator(std::string_view annotator_id) const {
  return std::find(annotators.begin(), annotators.end(), annotator_id) != annotators.end();
}

int wizard_depth(const WizardNode& node) {
  if (node.is_outcome()) return 0;
  const auto& q = node.question();
  return 1 + std::max(wizard_depth(*q.yes), wizard_depth(*q.no));
}

void ValidationReport::error(std::string path, std::string message) {
  errors.push_back({std::move(path), std::move(message)});
}

void ValidationReport::warn(std::string path, std::string message) {
  warnings.push_back({std::move(path), std::move(message)});
}

void ValidationReport::merge(const ValidationReport& other, std::string_view prefix) {
  auto rebase = [&](const Finding& f) {
    if (prefix.empty() || f.path.empty() || f.path[0] != '$') return f;
    return Finding{std::string(prefix) + f.path.substr(1), f.message};
  };
  for (const auto& f : other.errors) errors.push_back(rebase(f));
  for (const auto& f : other.warnings) warnings.push_back(rebase(f));
}

InvalidConfigError::InvalidConfigError(ValidationReport report)
    : SchemaError(report.errors.empty() ? "$" : report.errors.front().path,
                  report.errors.empty() ? "configuration rejected"
                                        : report.errors.front().message),
      report_(std::move(report)) {}

bool is_safe_identifier(std::string_view id) {
  if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '-' || c == '_' || c == '.';
  });
}

namespace {

// Parsing guard only; the semantic limit is kMaxWizardDepth.
constexpr int kMaxParseDepth = 256;

std::string type_name(const json& value) { return value.type_name(); }

// Reads the members of one JSON object, remembering which keys were consumed
// so that leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) {
      throw SchemaError(path_, "expected object, got " + type_name(object_));
    }
  }

  const std::string& path() const { return path_; }
  std::string child(std::string_view key) const { return path_ + "." + std::string(key); }

  const json* optional(std::string_view key) {
    auto it = object_.find(key);
    if (it == object_.end()) return nullptr;
    used_.insert(std::string(key));
    return &*it;
  }

  const json& required(std::string_view key) {
    const json* value = optional(key);
    if (value == nullptr) throw SchemaError(child(key), "missing required field");
    return *value;
  }

  std::string string(std::string_view key) { return as_string(required(key), child(key)); }

  std::string string_or(std::string_view key, std::string fallback) {
    const json* value = optional(key);
    return value == nullptr ? fallback : as_string(*value, child(key));
  }

  bool boolean_or(std::string_view key, bool fallback) {
    const json* value = optional(key);
    if (value == nullptr) return fallback;
    if (!value->is_boolean()) {
      throw SchemaError(child(key), "expected boolean, got " + type_name(*value));
    }
    return value->get<bool>();
  }

  const json& array(std::string_view key) {
    const json& value = required(key);
    if (!value.is_array()) throw SchemaError(child(key), "expected array, got " + type_name(value));
    return value;
  }

  const json* optional_array(std::string_view key) {
    const json* value = optional(key);
    if (value != nullptr && !value->is_array()) {
      throw SchemaError(child(key), "expected array, got " + type_name(*value));
    }
    return value;
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!used_.count(key)) throw SchemaError(child(key), "unknown field");
    }
  }

  static std::string as_string(const json& value, const std::string& path) {
    if (!value.is_string()) throw SchemaError(path, "expected string, got " + type_name(value));
    return value.get<std::string>();
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename Enum>
Enum parse_enum(const std::string& value, const std::string& path,
                std::initializer_list<std::pair<const char*, Enum>> table) {
  for (const auto& [name, e] : table) {
    if (value == name) return e;
  }
  std::string allowed;
  for (const auto& [name, e] : table) {
    if (!allowed.empty()) allowed += ", ";
    allowed += name;
  }
  throw SchemaError(path, "invalid value '" + value + "' (expected one of: " + allowed + ")");
}

json parse_json_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SyntaxError(e.what());
  }
}

LabelOption option_from_json(const json& doc, const std::string& path) {
  ObjectReader r(doc, path);
  LabelOption option;
  option.id = r.string("id");
  option.display = r.string_or("display", option.id);
  if (const json* def = r.optional("definition")) {
    option.definition = ObjectReader::as_string(*def, r.child("definition"));
  }
  r.finish();
  return option;
}

Category category_from_json(const json& doc, const std::string& path) {
  ObjectReader r(doc, path);
  Category category;
  category.id = r.string("id");
  category.name = r.string("name");
  category.kind = parse_enum<CategoryKind>(
      r.string("kind"), r.child("kind"),
      {{"single", CategoryKind::single}, {"multi", CategoryKind::multi}, {"text", CategoryKind::text}});
  if (const json* options = r.optional_array("options")) {
    for (std::size_t i = 0; i < options->size(); ++i) {
      category.options.push_back(
          option_from_json((*options)[i], r.child("options") + "[" + std::to_string(i) + "]"));
    }
  }
  category.definition = r.string_or("definition", "");
  if (const json* examples = r.optional_array("examples")) {
    for (std::size_t i = 0; i < examples->size(); ++i) {
      category.examples.push_back(ObjectReader::as_string(
          (*examples)[i], r.child("examples") + "[" + std::to_string(i) + "]"));
    }
  }
  category.speaker_filter = parse_enum<SpeakerFilter>(
      r.string_or("speaker_filter", "any"), r.child("speaker_filter"),
      {{"any", SpeakerFilter::any}, {"human", SpeakerFilter::human}, {"bot", SpeakerFilter::bot}});
  r.finish();
  return category;
}

DependencyRule rule_from_json(const json& doc, const std::string& path) {
  ObjectReader r(doc, path);
  DependencyRule rule;
  {
    ObjectReader t(r.required("trigger"), r.child("trigger"));
    rule.trigger.category_id = t.string("category_id");
    rule.trigger.option_id = t.string("option_id");
    rule.trigger.selected = t.boolean_or("selected", true);
    t.finish();
  }
  const json& effects = r.array("effects");
  for (std::size_t i = 0; i < effects.size(); ++i) {
    ObjectReader e(effects[i], r.child("effects") + "[" + std::to_string(i) + "]");
    Effect effect;
    effect.kind = parse_enum<EffectKind>(e.string("type"), e.child("type"),
                                         {{"disable_option", EffectKind::disable_option},
                                          {"auto_select", EffectKind::auto_select},
                                          {"hide_category", EffectKind::hide_category}});
    effect.category_id = e.string("category_id");
    if (effect.kind != EffectKind::hide_category) effect.option_id = e.string("option_id");
    e.finish();
    rule.effects.push_back(std::move(effect));
  }
  r.finish();
  return rule;
}

WizardNodePtr wizard_node_from_json(const json& doc, const std::string& path, int depth) {
  if (depth > kMaxParseDepth) throw SchemaError(path, "wizard tree nested too deeply");
  ObjectReader r(doc, path);
  auto node = std::make_shared<WizardNode>();
  if (r.optional("outcome") != nullptr) {
    node->body = WizardOutcome{r.string("outcome")};
  } else {
    WizardQuestion q;
    q.text = r.string("question");
    q.yes = wizard_node_from_json(r.required("yes"), r.child("yes"), depth + 1);
    q.no = wizard_node_from_json(r.required("no"), r.child("no"), depth + 1);
    node->body = std::move(q);
  }
  r.finish();
  return node;
}

json wizard_node_to_json(const WizardNode& node) {
  if (node.is_outcome()) return json{{"outcome", node.outcome().option_id}};
  const auto& q = node.question();
  return json{{"question", q.text}, {"yes", wizard_node_to_json(*q.yes)},
              {"no", wizard_node_to_json(*q.no)}};
}

}  // namespace

CodeSetConfig code_set_from_json(const json& doc, const std::string& path) {
  ObjectReader r(doc, path);
  CodeSetConfig config;
  config.id = r.string("id");
  config.name = r.string("name");
  config.scope = parse_enum<Scope>(r.string_or("scope", "utterance"), r.child("scope"),
                                   {{"utterance", Scope::utterance},
                                    {"conversation", Scope::conversation}});
  const json& categories = r.array("categories");
  for (std::size_t i = 0; i < categories.size(); ++i) {
    config.categories.push_back(
        category_from_json(categories[i], r.child("categories") + "[" + std::to_string(i) + "]"));
  }
  if (const json* rules = r.optional_array("rules")) {
    for (std::size_t i = 0; i < rules->size(); ++i) {
      config.rules.push_back(
          rule_from_json((*rules)[i], r.child("rules") + "[" + std::to_string(i) + "]"));
    }
  }
  if (const json* wizards = r.optional("wizards")) {
    if (!wizards->is_object()) {
      throw SchemaError(r.child("wizards"), "expected object, got " + type_name(*wizards));
    }
    for (const auto& [category_id, flow_doc] : wizards->items()) {
      ObjectReader w(flow_doc, r.child("wizards") + "." + category_id);
      WizardFlow flow;
      flow.category_id = category_id;
      flow.root = wizard_node_from_json(w.required("root"), w.child("root"), 0);
      w.finish();
      config.wizards.emplace(category_id, std::move(flow));
    }
  }
  r.finish();
  return config;
}

CodeSetConfig parse_code_set(std::string_view text) {
  return code_set_from_json(parse_json_text(text));
}

json to_json(const CodeSetConfig& config) {
  json categories = json::array();
  for (const auto& c : config.categories) {
    json options = json::array();
    for (const auto& o : c.options) {
      json option{{"id", o.id}, {"display", o.display}};
      if (o.definition) option["definition"] = *o.definition;
      options.push_back(std::move(option));
    }
    categories.push_back({{"id", c.id},
                          {"name", c.name},
                          {"kind", to_string(c.kind)},
                          {"options", std::move(options)},
                          {"definition", c.definition},
                          {"examples", c.examples},
                          {"speaker_filter", to_string(c.speaker_filter)}});
  }
  json rules = json::array();
  for (const auto& rule : config.rules) {
    json effects = json::array();
    for (const auto& e : rule.effects) {
      json effect{{"type", to_string(e.kind)}, {"category_id", e.category_id}};
      if (e.kind != EffectKind::hide_category) effect["option_id"] = e.option_id;
      effects.push_back(std::move(effect));
    }
    rules.push_back({{"trigger",
                      {{"category_id", rule.trigger.category_id},
                       {"option_id", rule.trigger.option_id},
                       {"selected", rule.trigger.selected}}},
                     {"effects", std::move(effects)}});
  }
  json wizards = json::object();
  for (const auto& [category_id, flow] : config.wizards) {
    wizards[category_id] = {{"root", wizard_node_to_json(*flow.root)}};
  }
  return json{{"id", config.id},
              {"name", config.name},
              {"scope", to_string(config.scope)},
              {"categories", std::move(categories)},
              {"rules", std::move(rules)},
              {"wizards", std::move(wizards)}};
}

ProjectConfig project_from_json(const json& doc) {
  ObjectReader r(doc, "$");
  ProjectConfig config;
  config.id = r.string("id");
  if (!is_safe_identifier(config.id)) {
    throw SchemaError("$.id", "project id must match [A-Za-z0-9._-]+");
  }
  config.name = r.string("name");
  const json& annotators = r.array("annotators");
  if (annotators.empty()) throw SchemaError("$.annotators", "at least one annotator is required");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < annotators.size(); ++i) {
    std::string path = "$.annotators[" + std::to_string(i) + "]";
    std::string id = ObjectReader::as_string(annotators[i], path);
    if (id.empty()) throw SchemaError(path, "annotator id must be non-empty");
    if (!seen.insert(id).second) throw SchemaError(path, "duplicate annotator id '" + id + "'");
    config.annotators.push_back(std::move(id));
  }
  const json& code_sets = r.array("code_sets");
  for (std::size_t i = 0; i < code_sets.size(); ++i) {
    config.code_sets.push_back(
        code_set_from_json(code_sets[i], "$.code_sets[" + std::to_string(i) + "]"));
  }
  for (Scope scope : {Scope::utterance, Scope::conversation}) {
    auto n = std::count_if(config.code_sets.begin(), config.code_sets.end(),
                           [&](const CodeSetConfig& c) { return c.scope == scope; });
    if (n > 1) {
      throw SchemaError("$.code_sets", "at most one " + std::string(to_string(scope)) +
                                           "-scope code set per project");
    }
  }
  if (config.code_set_for(Scope::utterance) == nullptr) {
    throw SchemaError("$.code_sets", "at least one utterance-scope code set is required");
  }
  config.data_ref = r.string_or("data_ref", "");
  config.agreement_visibility = parse_enum<AgreementVisibility>(
      r.string_or("agreement_visibility", "creator_only"), "$.agreement_visibility",
      {{"creator_only", AgreementVisibility::creator_only}, {"all", AgreementVisibility::all}});
  r.finish();
  return config;
}

ProjectConfig parse_project(std::string_view text) {
  return project_from_json(parse_json_text(text));
}

json to_json(const ProjectConfig& config) {
  json code_sets = json::array();
  for (const auto& c : config.code_sets) code_sets.push_back(to_json(c));
  return json{{"id", config.id},
              {"name", config.name},
              {"annotators", config.annotators},
              {"code_sets", std::move(code_sets)},
              {"data_ref", config.data_ref},
              {"agreement_visibility", to_string(config.agreement_visibility)}};
}

namespace {

void validate_wizard_node(const CodeSetConfig& config, const Category& category,
                          const WizardNode& node, const std::string& path,
                          ValidationReport& report) {
  if (node.is_outcome()) {
    const auto& option_id = node.outcome().option_id;
    if (!category.has_option(option_id)) {
      report.error(path + ".outcome", "outcome references unknown option '" + option_id +
                                          "' of category '" + category.id + "'");
    }
    return;
  }
  const auto& q = node.question();
  if (q.text.empty()) {
    report.error(path + ".question", "question text must be non-empty");
  } else if (q.text.size() > kMaxQuestionLength) {
    report.error(path + ".question", "question text exceeds " +
                                         std::to_string(kMaxQuestionLength) + " characters");
  }
  validate_wizard_node(config, category, *q.yes, path + ".yes", report);
  validate_wizard_node(config, category, *q.no, path + ".no", report);
}

}  // namespace

ValidationReport validate_code_set(const CodeSetConfig& config) {
  ValidationReport report;
  if (config.id.empty()) report.error("$.id", "code set id must be non-empty");

  std::set<std::string> category_ids;
  for (std::size_t i = 0; i < config.categories.size(); ++i) {
    const auto& c = config.categories[i];
    const std::string path = "$.categories[" + std::to_string(i) + "]";
    if (c.id.empty()) {
      report.error(path + ".id", "category id must be non-empty");
    } else if (!category_ids.insert(c.id).second) {
      report.error(path + ".id", "duplicate category id '" + c.id + "'");
    }
    if (c.kind == CategoryKind::text) {
      if (!c.options.empty()) report.error(path + ".options", "text category cannot have options");
    } else if (c.options.empty()) {
      report.error(path + ".options", "single and multi categories need at least one option");
    }
    std::set<std::string> option_ids;
    for (std::size_t j = 0; j < c.options.size(); ++j) {
      const auto& o = c.options[j];
      const std::string opath = path + ".options[" + std::to_string(j) + "].id";
      if (o.id.empty()) {
        report.error(opath, "option id must be non-empty");
      } else if (!option_ids.insert(o.id).second) {
        report.error(opath, "duplicate option id '" + o.id + "'");
      }
    }
    if (config.scope == Scope::conversation && c.speaker_filter != SpeakerFilter::any) {
      report.warn(path + ".speaker_filter", "speaker_filter has no effect in a conversation-scope code set");
    }
  }

  // (trigger, target) pairs seen as disable / auto-select, for conflict detection.
  using Target = std::tuple<std::string, std::string, bool, std::string, std::string>;
  std::set<Target> disabled;
  std::set<Target> auto_selected;

  for (std::size_t i = 0; i < config.rules.size(); ++i) {
    const auto& rule = config.rules[i];
    const std::string path = "$.rules[" + std::to_string(i) + "]";
    const Category* trigger_category = config.find_category(rule.trigger.category_id);
    if (trigger_category == nullptr) {
      report.error(path + ".trigger.category_id",
                   "unknown category '" + rule.trigger.category_id + "'");
    } else if (!trigger_category->has_option(rule.trigger.option_id)) {
      report.error(path + ".trigger.option_id", "unknown option '" + rule.trigger.option_id +
                                                    "' in category '" + trigger_category->id + "'");
    }
    for (std::size_t j = 0; j < rule.effects.size(); ++j) {
      const auto& effect = rule.effects[j];
      const std::string epath = path + ".effects[" + std::to_string(j) + "]";
      const Category* target = config.find_category(effect.category_id);
      if (target == nullptr) {
        report.error(epath + ".category_id", "unknown category '" + effect.category_id + "'");
        continue;
      }
      if (effect.kind != EffectKind::disable_option && effect.category_id == rule.trigger.category_id) {
        report.error(epath + ".category_id", std::string(to_string(effect.kind)) +
                                                 " cannot target its own trigger category");
        continue;
      }
      if (effect.kind == EffectKind::hide_category) continue;
      if (!target->has_option(effect.option_id)) {
        report.error(epath + ".option_id", "unknown option '" + effect.option_id +
                                               "' in category '" + target->id + "'");
        continue;
      }
      if (effect.kind == EffectKind::disable_option && rule.trigger.selected &&
          effect.category_id == rule.trigger.category_id &&
          effect.option_id == rule.trigger.option_id) {
        report.warn(epath, "rule disables its own trigger option; selecting it will always fail");
      }
      Target key{rule.trigger.category_id, rule.trigger.option_id, rule.trigger.selected,
                 effect.category_id, effect.option_id};
      auto& mine = effect.kind == EffectKind::disable_option ? disabled : auto_selected;
      auto& other = effect.kind == EffectKind::disable_option ? auto_selected : disabled;
      if (other.count(key) && !mine.count(key)) {
        report.error(epath, "(" + effect.category_id + ", " + effect.option_id +
                                ") is both disabled and auto-selected by the same trigger");
      }
      mine.insert(key);
    }
  }

  for (const auto& [category_id, flow] : config.wizards) {
    const std::string path = "$.wizards." + category_id;
    const Category* category = config.find_category(category_id);
    if (category == nullptr) {
      report.error(path, "wizard for unknown category '" + category_id + "'");
      continue;
    }
    if (category->kind == CategoryKind::text) {
      report.error(path, "text categories cannot have a wizard");
      continue;
    }
    validate_wizard_node(config, *category, *flow.root, path + ".root", report);
  }
  return report;
}

ValidationReport validate_project(const ProjectConfig& config) {
  ValidationReport report;
  for (std::size_t i = 0; i < config.code_sets.size(); ++i) {
    const std::string prefix = "$.code_sets[" + std::to_string(i) + "]";
    ValidationReport inner = validate_code_set(config.code_sets[i]);
    if (inner.accepted()) {
      inner.merge(detect_wizard_conflicts(config.code_sets[i]));
      inner.merge(detect_rule_contradictions(config.code_sets[i]));
    }
    report.merge(inner, prefix);
  }
  return report;
}

}  // namespace cal
