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

#include "cal/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cal/errors.hpp"

namespace cal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kProjectFile = "project.json";
constexpr const char* kJournalFile = "journal.jsonl";

void write_file_atomically(const fs::path& path, const std::string& content, bool sync) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  if (sync) {
    int fd = ::open(tmp.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd >= 0) {
      ::fsync(fd);
      ::close(fd);
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string cell_value(const SelectedValue& value) {
  if (const auto* text = std::get_if<TextValue>(&value)) return text->text;
  std::string out;
  for (const auto& option : option_ids(value)) {
    if (!out.empty()) out += ";";
    out += option;
  }
  return out;
}

void csv_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_field(fields[i]);
  }
  out += "\r\n";
}

NotFoundError unknown_conversation(const std::string& id) {
  return NotFoundError(ErrorCode::unknown_conversation, "unknown conversation '" + id + "'");
}

}  // namespace

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

const Utterance* Conversation::find_utterance(std::string_view utterance_id) const {
  for (const auto& u : utterances) {
    if (u.id == utterance_id) return &u;
  }
  return nullptr;
}

std::string ExampleRef::key() const {
  return utterance_id ? conversation_id + "/" + *utterance_id : conversation_id;
}

json to_json(const ExampleRef& example) {
  json out{{"conversation_id", example.conversation_id}};
  if (example.utterance_id) out["utterance_id"] = *example.utterance_id;
  return out;
}

ExampleRef example_from_json(const json& doc) {
  if (!doc.is_object()) throw FormatError("example must be an object", "$.example");
  ExampleRef example;
  for (const auto& [key, value] : doc.items()) {
    if (key != "conversation_id" && key != "utterance_id") {
      throw FormatError("unknown field", "$.example." + key);
    }
    if (!value.is_string() && !(key == "utterance_id" && value.is_null())) {
      throw FormatError("expected string", "$.example." + key);
    }
  }
  if (!doc.contains("conversation_id")) {
    throw FormatError("missing required field", "$.example.conversation_id");
  }
  example.conversation_id = doc["conversation_id"].get<std::string>();
  if (doc.contains("utterance_id") && doc["utterance_id"].is_string()) {
    example.utterance_id = doc["utterance_id"].get<std::string>();
  }
  return example;
}

ProjectStore::ProjectStore(fs::path dir, ProjectConfig config, std::string creator,
                           Options options)
    : dir_(std::move(dir)),
      config_(std::move(config)),
      creator_(std::move(creator)),
      options_(std::move(options)) {}

std::unique_ptr<ProjectStore> ProjectStore::create(const fs::path& dir, ProjectConfig config,
                                                   std::string creator, Options options) {
  fs::create_directories(dir);
  json meta{{"config", to_json(config)},
            {"creator", creator},
            {"created_at", options.clock()}};
  write_file_atomically(dir / kProjectFile, meta.dump(2) + "\n", options.sync_writes);
  std::unique_ptr<ProjectStore> store(
      new ProjectStore(dir, std::move(config), std::move(creator), std::move(options)));
  store->journal_ = std::make_unique<Journal>(dir / kJournalFile, store->options_.sync_writes);
  store->replay(store->journal_->take_loaded());
  return store;
}

std::unique_ptr<ProjectStore> ProjectStore::open(const fs::path& dir, Options options) {
  json meta;
  try {
    meta = json::parse(read_file(dir / kProjectFile));
  } catch (const json::parse_error& e) {
    throw FormatError("corrupt project file in " + dir.string() + ": " + e.what());
  }
  if (!meta.is_object() || !meta.contains("config") || !meta.contains("creator")) {
    throw FormatError("project file in " + dir.string() + " lacks config or creator");
  }
  ProjectConfig config = project_from_json(meta["config"]);
  std::unique_ptr<ProjectStore> store(new ProjectStore(
      dir, std::move(config), meta["creator"].get<std::string>(), std::move(options)));
  store->journal_ = std::make_unique<Journal>(dir / kJournalFile, store->options_.sync_writes);
  store->replay(store->journal_->take_loaded());
  return store;
}

void ProjectStore::replay(std::vector<json> records) {
  std::unique_lock lock(mutex_);
  for (const auto& record : records) {
    try {
      apply_record(record);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError("corrupt journal record " + std::to_string(records_ + 1) + ": " + e.what());
    }
  }
}

std::vector<Conversation> ProjectStore::parse_transcript(const json& document) const {
  if (!document.is_array()) throw FormatError("transcript must be a JSON array", "$");
  std::vector<Conversation> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < document.size(); ++i) {
    const std::string path = "$[" + std::to_string(i) + "]";
    const json& doc = document[i];
    if (!doc.is_object()) throw FormatError("conversation must be an object", path);
    for (const auto& [key, value] : doc.items()) {
      if (key != "id" && key != "utterances") throw FormatError("unknown field", path + "." + key);
    }
    if (!doc.contains("id") || !doc["id"].is_string() || doc["id"].get<std::string>().empty()) {
      throw FormatError("conversation id must be a non-empty string", path + ".id");
    }
    if (!doc.contains("utterances") || !doc["utterances"].is_array() ||
        doc["utterances"].empty()) {
      throw FormatError("conversation needs a non-empty utterances array", path + ".utterances");
    }
    Conversation c;
    c.id = doc["id"].get<std::string>();
    if (!ids.insert(c.id).second || conversation_index_.count(c.id)) {
      throw DuplicateIdError("duplicate conversation id '" + c.id + "'");
    }
    std::set<std::string> utterance_ids;
    const json& utterances = doc["utterances"];
    for (std::size_t j = 0; j < utterances.size(); ++j) {
      const std::string upath = path + ".utterances[" + std::to_string(j) + "]";
      const json& u = utterances[j];
      if (!u.is_object()) throw FormatError("utterance must be an object", upath);
      for (const auto& [key, value] : u.items()) {
        if (key != "id" && key != "speaker" && key != "text") {
          throw FormatError("unknown field", upath + "." + key);
        }
      }
      Utterance utterance;
      utterance.index = static_cast<int>(j);
      if (!u.contains("speaker") || !u["speaker"].is_string()) {
        throw FormatError("speaker must be \"human\" or \"bot\"", upath + ".speaker");
      }
      auto speaker = parse_speaker(u["speaker"].get<std::string>());
      if (!speaker) throw FormatError("speaker must be \"human\" or \"bot\"", upath + ".speaker");
      utterance.speaker = *speaker;
      if (!u.contains("text") || !u["text"].is_string() || u["text"].get<std::string>().empty()) {
        throw FormatError("utterance text must be a non-empty string", upath + ".text");
      }
      utterance.text = u["text"].get<std::string>();
      if (u.contains("id")) {
        if (!u["id"].is_string() || u["id"].get<std::string>().empty()) {
          throw FormatError("utterance id must be a non-empty string", upath + ".id");
        }
        utterance.id = u["id"].get<std::string>();
      } else {
        utterance.id = c.id + "#" + std::to_string(j);
      }
      if (!utterance_ids.insert(utterance.id).second) {
        throw DuplicateIdError("duplicate utterance id '" + utterance.id + "' in conversation '" +
                               c.id + "'");
      }
      c.utterances.push_back(std::move(utterance));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::size_t ProjectStore::import_conversations(const json& document) {
  std::unique_lock lock(mutex_);
  std::vector<Conversation> parsed = parse_transcript(document);
  if (parsed.empty()) return 0;
  const std::int64_t now = options_.clock();
  json conversations = json::array();
  for (const auto& c : parsed) {
    json utterances = json::array();
    for (const auto& u : c.utterances) {
      utterances.push_back({{"id", u.id}, {"speaker", to_string(u.speaker)}, {"text", u.text}});
    }
    conversations.push_back({{"id", c.id}, {"created_at", now}, {"utterances", utterances}});
  }
  append_and_apply({{"kind", "import"},
                    {"seq", seq_ + 1},
                    {"saved_at", now},
                    {"payload", {{"conversations", std::move(conversations)}}}});
  return parsed.size();
}

void ProjectStore::append_and_apply(json record) {
  journal_->append(record);
  apply_record(record);
}

void ProjectStore::apply_record(const json& record) {
  const std::string kind = record.at("kind").get<std::string>();
  const json& payload = record.at("payload");
  const std::int64_t saved_at = record.at("saved_at").get<std::int64_t>();
  const std::int64_t seq = record.at("seq").get<std::int64_t>();
  if (seq != seq_ + 1) {
    throw FormatError("journal sequence gap: expected " + std::to_string(seq_ + 1) + ", found " +
                      std::to_string(seq));
  }

  if (kind == "import") {
    for (const auto& doc : payload.at("conversations")) {
      Conversation c;
      c.id = doc.at("id").get<std::string>();
      c.created_at = doc.at("created_at").get<std::int64_t>();
      int index = 0;
      for (const auto& u : doc.at("utterances")) {
        auto speaker = parse_speaker(u.at("speaker").get<std::string>());
        if (!speaker) throw FormatError("bad speaker in journal");
        c.utterances.push_back(
            {u.at("id").get<std::string>(), *speaker, u.at("text").get<std::string>(), index++});
      }
      conversation_index_[c.id] = conversations_.size();
      conversations_.push_back(std::move(c));
    }
  } else if (kind == "assignment") {
    const std::string annotator = payload.at("annotator_id").get<std::string>();
    const ExampleRef example = example_from_json(payload.at("example"));
    const CodeSetConfig* code_set = config_.code_set_for(example.scope());
    if (code_set == nullptr) throw FormatError("assignment for a scope without a code set");
    auto& example_slots = labels_[annotator][example];
    for (const auto& change : payload.at("changes")) {
      const std::string category_id = change.at("category_id").get<std::string>();
      const Category* category = code_set->find_category(category_id);
      if (category == nullptr) throw FormatError("assignment for unknown category " + category_id);
      Slot& slot = example_slots[category_id];
      if (slot.live && example.utterance_id) {
        for (const auto& option : option_ids(slot.live->value)) {
          previous_[{annotator, category_id, option}].erase({slot.saved_at, slot.version, example.key(), example});
        }
      }
      slot.version = change.at("version").get<std::int64_t>();
      slot.saved_at = saved_at;
      if (change.at("value").is_null()) {
        slot.live.reset();
      } else {
        slot.live = Selection{value_from_json(*category, change.at("value")),
                              origin_from_string(change.at("origin").get<std::string>())};
        if (example.utterance_id) {
          for (const auto& option : option_ids(slot.live->value)) {
            previous_[{annotator, category_id, option}].insert({slot.saved_at, slot.version, example.key(), example});
          }
        }
      }
    }
    resume_[annotator] = {annotator, example.conversation_id, example.utterance_id, saved_at};
  } else if (kind == "resume") {
    const std::string annotator = payload.at("annotator_id").get<std::string>();
    ResumePosition position{annotator, payload.at("conversation_id").get<std::string>(),
                            std::nullopt, saved_at};
    if (payload.contains("utterance_id")) {
      position.utterance_id = payload.at("utterance_id").get<std::string>();
    }
    resume_[annotator] = std::move(position);
  } else {
    throw FormatError("unknown journal record kind '" + kind + "'");
  }
  seq_ = seq;
  ++records_;
}

ExampleBinding ProjectStore::bind_locked(const ExampleRef& example) const {
  auto it = conversation_index_.find(example.conversation_id);
  if (it == conversation_index_.end()) throw unknown_conversation(example.conversation_id);
  const Conversation& c = conversations_[it->second];
  ExampleBinding binding{config_.code_set_for(example.scope()), {example.scope(), Speaker::human}};
  if (example.utterance_id) {
    const Utterance* u = c.find_utterance(*example.utterance_id);
    if (u == nullptr) {
      throw NotFoundError(ErrorCode::unknown_utterance, "unknown utterance '" +
                                                            *example.utterance_id + "' in '" +
                                                            c.id + "'");
    }
    binding.context.speaker = u->speaker;
  }
  if (binding.code_set == nullptr) {
    throw NotFoundError(ErrorCode::unknown_category,
                        "project has no " + std::string(to_string(example.scope())) +
                            "-scope code set");
  }
  return binding;
}

ExampleBinding ProjectStore::bind(const ExampleRef& example) const {
  std::shared_lock lock(mutex_);
  return bind_locked(example);
}

const ProjectStore::ExampleSlots* ProjectStore::slots(const std::string& annotator_id,
                                                      const ExampleRef& example) const {
  auto a = labels_.find(annotator_id);
  if (a == labels_.end()) return nullptr;
  auto e = a->second.find(example);
  return e == a->second.end() ? nullptr : &e->second;
}

SelectionSet ProjectStore::selection_set_locked(const std::string& annotator_id,
                                                const ExampleRef& example) const {
  SelectionSet out;
  if (const ExampleSlots* s = slots(annotator_id, example)) {
    for (const auto& [category_id, slot] : *s) {
      if (slot.live) out.emplace(category_id, *slot.live);
    }
  }
  return out;
}

SelectionSet ProjectStore::get_selection_set(const std::string& annotator_id,
                                             const ExampleRef& example) const {
  std::shared_lock lock(mutex_);
  return selection_set_locked(annotator_id, example);
}

std::map<std::string, std::int64_t> ProjectStore::versions(const std::string& annotator_id,
                                                           const ExampleRef& example) const {
  std::shared_lock lock(mutex_);
  std::map<std::string, std::int64_t> out;
  if (const ExampleSlots* s = slots(annotator_id, example)) {
    for (const auto& [category_id, slot] : *s) out[category_id] = slot.version;
  }
  return out;
}

SaveResult ProjectStore::commit(const std::string& annotator_id, const ExampleRef& example,
                                const std::string& edited_category, const Resolution& next) {
  const ExampleSlots* current = slots(annotator_id, example);
  auto slot_of = [&](const std::string& category_id) -> const Slot* {
    if (current == nullptr) return nullptr;
    auto it = current->find(category_id);
    return it == current->end() ? nullptr : &it->second;
  };

  std::set<std::string> categories;
  if (current != nullptr) {
    for (const auto& [id, slot] : *current) categories.insert(id);
  }
  for (const auto& [id, selection] : next.selections) categories.insert(id);

  json changes = json::array();
  for (const auto& category_id : categories) {
    const Slot* slot = slot_of(category_id);
    const std::optional<Selection> before = slot ? slot->live : std::nullopt;
    auto it = next.selections.find(category_id);
    const std::optional<Selection> after =
        it == next.selections.end() ? std::nullopt : std::optional<Selection>(it->second);
    if (before == after) continue;
    const std::int64_t version = (slot ? slot->version : 0) + 1;
    changes.push_back({{"category_id", category_id},
                       {"value", after ? value_to_json(after->value) : json(nullptr)},
                       {"origin", after ? to_string(after->origin) : to_string(before->origin)},
                       {"version", version}});
  }

  if (!changes.empty()) {
    append_and_apply({{"kind", "assignment"},
                      {"seq", seq_ + 1},
                      {"saved_at", options_.clock()},
                      {"payload",
                       {{"annotator_id", annotator_id},
                        {"example", to_json(example)},
                        {"changes", std::move(changes)}}}});
  }

  SaveResult result;
  result.resolution = next;
  if (const ExampleSlots* s = slots(annotator_id, example)) {
    for (const auto& [category_id, slot] : *s) result.versions[category_id] = slot.version;
  }
  auto v = result.versions.find(edited_category);
  result.version = v == result.versions.end() ? 0 : v->second;
  return result;
}

SaveResult ProjectStore::save_label(const LabelEdit& edit, VersionGuard guard) {
  std::unique_lock lock(mutex_);
  if (!config_.is_annotator(edit.annotator_id)) {
    throw Error(ErrorCode::not_a_member,
                "'" + edit.annotator_id + "' is not an annotator of project '" + config_.id + "'");
  }
  const ExampleBinding binding = bind_locked(edit.example);
  if (binding.code_set->find_category(edit.category_id) == nullptr) {
    throw NotFoundError(ErrorCode::unknown_category, "unknown category '" + edit.category_id + "'");
  }

  const Slot* slot = nullptr;
  if (const ExampleSlots* s = slots(edit.annotator_id, edit.example)) {
    auto it = s->find(edit.category_id);
    if (it != s->end()) slot = &it->second;
  }
  const std::int64_t current_version = slot ? slot->version : 0;
  const bool live = slot && slot->live;
  if (guard.mode == VersionGuard::Mode::exact && guard.version != current_version) {
    throw VersionConflictError("expected version " + std::to_string(guard.version) + " of '" +
                               edit.category_id + "' but found " + std::to_string(current_version));
  }
  if (guard.mode == VersionGuard::Mode::absent && live) {
    throw VersionConflictError("'" + edit.category_id + "' already has a label at version " +
                               std::to_string(current_version));
  }

  const Resolution next =
      apply_selection(*binding.code_set, selection_set_locked(edit.annotator_id, edit.example),
                      binding.context, edit.category_id, edit.value, edit.selected, edit.origin);
  return commit(edit.annotator_id, edit.example, edit.category_id, next);
}

std::int64_t ProjectStore::save_assignment(const LabelAssignment& assignment,
                                           std::optional<std::int64_t> expected_version) {
  LabelEdit edit{assignment.annotator_id, assignment.example, assignment.category_id,
                 assignment.value, true, assignment.origin};
  return save_label(edit, expected_version ? VersionGuard::exact(*expected_version)
                                           : VersionGuard::absent())
      .version;
}

SaveResult ProjectStore::apply_wizard_result(const std::string& annotator_id,
                                             const ExampleRef& example,
                                             const wizard::Result& result) {
  std::unique_lock lock(mutex_);
  if (!config_.is_annotator(annotator_id)) {
    throw Error(ErrorCode::not_a_member,
                "'" + annotator_id + "' is not an annotator of project '" + config_.id + "'");
  }
  const ExampleBinding binding = bind_locked(example);
  const Resolution next = wizard::apply_result(
      *binding.code_set, selection_set_locked(annotator_id, example), binding.context, result);
  return commit(annotator_id, example, result.category_id, next);
}

std::optional<PreviousLabel> ProjectStore::previous_labeled(const std::string& annotator_id,
                                                            const std::string& category_id,
                                                            const std::string& option_id,
                                                            const ExampleRef& exclude) const {
  std::shared_lock lock(mutex_);
  const CodeSetConfig* code_set = config_.code_set_for(Scope::utterance);
  const Category* category = code_set ? code_set->find_category(category_id) : nullptr;
  if (category == nullptr) {
    throw NotFoundError(ErrorCode::unknown_category, "unknown category '" + category_id + "'");
  }
  if (!category->has_option(option_id)) {
    throw NotFoundError(ErrorCode::unknown_option,
                        "unknown option '" + option_id + "' in category '" + category_id + "'");
  }
  auto it = previous_.find({annotator_id, category_id, option_id});
  if (it == previous_.end()) return std::nullopt;
  for (auto key = it->second.rbegin(); key != it->second.rend(); ++key) {
    const auto& example = std::get<3>(*key);
    if (example == exclude) continue;
    const Conversation& c = conversations_[conversation_index_.at(example.conversation_id)];
    const Slot& slot = labels_.at(annotator_id).at(example).at(category_id);
    PreviousLabel out;
    out.conversation_id = c.id;
    out.utterance = *c.find_utterance(*example.utterance_id);
    out.assignment = {annotator_id, example, category_id, slot.live->value,
                      slot.live->origin, slot.saved_at, slot.version};
    return out;
  }
  return std::nullopt;
}

std::vector<ExampleRef> ProjectStore::units_locked() const {
  std::vector<ExampleRef> units;
  const CodeSetConfig* utterance_set = config_.code_set_for(Scope::utterance);
  const CodeSetConfig* conversation_set = config_.code_set_for(Scope::conversation);
  for (const auto& c : conversations_) {
    if (utterance_set != nullptr) {
      for (const auto& u : c.utterances) {
        if (!applicable_categories(*utterance_set, {Scope::utterance, u.speaker}).empty()) {
          units.push_back({c.id, u.id});
        }
      }
    }
    if (conversation_set != nullptr && !conversation_set->categories.empty()) {
      units.push_back({c.id, std::nullopt});
    }
  }
  return units;
}

bool ProjectStore::unit_complete(const std::string& annotator_id,
                                 const ExampleRef& example) const {
  const ExampleBinding binding = bind_locked(example);
  return check_complete(*binding.code_set, selection_set_locked(annotator_id, example),
                        binding.context);
}

ProgressSummary ProjectStore::progress(const std::string& annotator_id) const {
  std::shared_lock lock(mutex_);
  ProgressSummary summary;
  summary.annotator_id = annotator_id;
  std::map<std::string, std::pair<int, int>> per_conversation;  // complete, total
  for (const auto& unit : units_locked()) {
    auto& [done, total] = per_conversation[unit.conversation_id];
    ++total;
    ++summary.total_units;
    if (unit_complete(annotator_id, unit)) {
      ++done;
      ++summary.labeled_units;
    }
  }
  summary.fraction = summary.total_units == 0
                         ? Rational(0)
                         : Rational(summary.labeled_units, summary.total_units);
  for (const auto& c : conversations_) {
    auto it = per_conversation.find(c.id);
    if (it == per_conversation.end()) continue;
    summary.per_conversation.emplace_back(c.id, Rational(it->second.first, it->second.second));
  }
  if (auto a = labels_.find(annotator_id); a != labels_.end()) {
    for (const auto& [example, example_slots] : a->second) {
      for (const auto& [category_id, slot] : example_slots) {
        if (!slot.live) continue;
        switch (slot.live->origin) {
          case Origin::manual: ++summary.labels.manual; break;
          case Origin::auto_rule: ++summary.labels.auto_rule; break;
          case Origin::auto_wizard: ++summary.labels.auto_wizard; break;
        }
      }
    }
  }
  return summary;
}

std::optional<ResumePosition> ProjectStore::resume(const std::string& annotator_id) const {
  std::shared_lock lock(mutex_);
  if (auto it = resume_.find(annotator_id); it != resume_.end()) return it->second;
  const auto units = units_locked();
  if (units.empty()) return std::nullopt;
  for (const auto& unit : units) {
    if (!unit_complete(annotator_id, unit)) {
      return ResumePosition{annotator_id, unit.conversation_id, unit.utterance_id, 0};
    }
  }
  return ResumePosition{annotator_id, units.back().conversation_id, units.back().utterance_id, 0};
}

void ProjectStore::set_resume(const std::string& annotator_id, const ExampleRef& example) {
  std::unique_lock lock(mutex_);
  bind_locked(example);
  json payload{{"annotator_id", annotator_id}, {"conversation_id", example.conversation_id}};
  if (example.utterance_id) payload["utterance_id"] = *example.utterance_id;
  append_and_apply({{"kind", "resume"},
                    {"seq", seq_ + 1},
                    {"saved_at", options_.clock()},
                    {"payload", std::move(payload)}});
}

std::string ProjectStore::export_csv(const std::string& annotator_id) const {
  std::shared_lock lock(mutex_);
  const CodeSetConfig* code_set = config_.code_set_for(Scope::utterance);
  std::vector<std::string> header{"conversation_id", "utterance_index", "speaker", "text"};
  for (const auto& c : code_set->categories) header.push_back(c.id);
  std::string out;
  csv_row(out, header);
  for (const auto& c : conversations_) {
    for (const auto& u : c.utterances) {
      std::vector<std::string> row{c.id, std::to_string(u.index), std::string(to_string(u.speaker)),
                                   u.text};
      const SelectionSet selections = selection_set_locked(annotator_id, {c.id, u.id});
      for (const auto& category : code_set->categories) {
        auto it = selections.find(category.id);
        row.push_back(it == selections.end() ? "" : cell_value(it->second.value));
      }
      csv_row(out, row);
    }
  }
  return out;
}

std::string ProjectStore::export_conversations_csv(const std::string& annotator_id) const {
  std::shared_lock lock(mutex_);
  const CodeSetConfig* code_set = config_.code_set_for(Scope::conversation);
  std::vector<std::string> header{"conversation_id"};
  if (code_set != nullptr) {
    for (const auto& c : code_set->categories) header.push_back(c.id);
  }
  std::string out;
  csv_row(out, header);
  for (const auto& c : conversations_) {
    std::vector<std::string> row{c.id};
    if (code_set != nullptr) {
      const SelectionSet selections = selection_set_locked(annotator_id, {c.id, std::nullopt});
      for (const auto& category : code_set->categories) {
        auto it = selections.find(category.id);
        row.push_back(it == selections.end() ? "" : cell_value(it->second.value));
      }
    }
    csv_row(out, row);
  }
  return out;
}

metrics::AgreementReport ProjectStore::agreement_report() const {
  std::shared_lock lock(mutex_);
  metrics::ProjectLabels labels;
  for (const auto& [annotator, examples] : labels_) {
    for (const auto& [example, example_slots] : examples) {
      const CodeSetConfig* code_set = config_.code_set_for(example.scope());
      for (const auto& [category_id, slot] : example_slots) {
        if (!slot.live) continue;
        labels[annotator][metrics::label_key(code_set->id, category_id)][example.key()] =
            slot.live->value;
      }
    }
  }
  return metrics::agreement_report(config_, labels);
}

std::vector<Conversation> ProjectStore::conversations() const {
  std::shared_lock lock(mutex_);
  return conversations_;
}

std::optional<Conversation> ProjectStore::conversation(const std::string& conversation_id) const {
  std::shared_lock lock(mutex_);
  auto it = conversation_index_.find(conversation_id);
  if (it == conversation_index_.end()) return std::nullopt;
  return conversations_[it->second];
}

std::vector<LabelAssignment> ProjectStore::live_assignments() const {
  std::shared_lock lock(mutex_);
  std::vector<LabelAssignment> out;
  for (const auto& [annotator, examples] : labels_) {
    for (const auto& [example, example_slots] : examples) {
      for (const auto& [category_id, slot] : example_slots) {
        if (!slot.live) continue;
        out.push_back({annotator, example, category_id, slot.live->value, slot.live->origin,
                       slot.saved_at, slot.version});
      }
    }
  }
  return out;
}

json ProjectStore::dump_state() const {
  std::shared_lock lock(mutex_);
  json conversations = json::array();
  for (const auto& c : conversations_) {
    json utterances = json::array();
    for (const auto& u : c.utterances) {
      utterances.push_back({u.id, to_string(u.speaker), u.text, u.index});
    }
    conversations.push_back({{"id", c.id}, {"created_at", c.created_at}, {"utterances", utterances}});
  }
  json labels = json::object();
  for (const auto& [annotator, examples] : labels_) {
    for (const auto& [example, example_slots] : examples) {
      for (const auto& [category_id, slot] : example_slots) {
        labels[annotator][example.key()][category_id] = {
            {"value", slot.live ? value_to_json(slot.live->value) : json(nullptr)},
            {"origin", slot.live ? to_string(slot.live->origin) : "retracted"},
            {"version", slot.version},
            {"saved_at", slot.saved_at}};
      }
    }
  }
  json resume = json::object();
  for (const auto& [annotator, position] : resume_) {
    resume[annotator] = {{"conversation_id", position.conversation_id},
                         {"utterance_id", position.utterance_id ? json(*position.utterance_id)
                                                                : json(nullptr)},
                         {"updated_at", position.updated_at}};
  }
  return {{"conversations", std::move(conversations)},
          {"labels", std::move(labels)},
          {"resume", std::move(resume)},
          {"seq", seq_}};
}

std::size_t ProjectStore::journal_records() const {
  std::shared_lock lock(mutex_);
  return records_;
}

std::uint64_t ProjectStore::journal_bytes() const {
  std::shared_lock lock(mutex_);
  return journal_->size_bytes();
}

void ProjectStore::set_fault_hook(Journal::FaultHook hook) {
  std::unique_lock lock(mutex_);
  journal_->set_fault_hook(std::move(hook));
}

Store::Store(fs::path data_dir, ProjectStore::Options options)
    : data_dir_(std::move(data_dir)), options_(std::move(options)) {
  fs::create_directories(data_dir_);
}

std::shared_ptr<ProjectStore> Store::create_project(const ProjectConfig& config,
                                                    const std::string& creator,
                                                    const fs::path& base_dir) {
  ValidationReport report = validate_project(config);
  if (!report.accepted()) throw InvalidConfigError(std::move(report));

  std::lock_guard lock(mutex_);
  const fs::path dir = data_dir_ / config.id;
  if (open_.count(config.id) || fs::exists(dir)) {
    throw DuplicateIdError("project '" + config.id + "' already exists");
  }

  json transcript;
  if (!config.data_ref.empty()) {
    fs::path source = config.data_ref;
    if (source.is_relative() && !base_dir.empty()) source = base_dir / source;
    try {
      transcript = json::parse(read_file(source));
    } catch (const json::parse_error& e) {
      throw FormatError("transcript " + source.string() + " is not valid JSON: " + e.what());
    } catch (const IoError& e) {
      throw FormatError(std::string("cannot read transcript: ") + e.what(), "$.data_ref");
    }
  }

  std::shared_ptr<ProjectStore> store;
  try {
    store = ProjectStore::create(dir, config, creator, options_);
    if (!transcript.is_null()) store->import_conversations(transcript);
  } catch (...) {
    store.reset();
    std::error_code ec;
    fs::remove_all(dir, ec);
    throw;
  }
  open_[config.id] = store;
  return store;
}

std::shared_ptr<ProjectStore> Store::project(const std::string& project_id) {
  std::lock_guard lock(mutex_);
  if (auto it = open_.find(project_id); it != open_.end()) return it->second;
  const fs::path dir = data_dir_ / project_id;
  if (!is_safe_identifier(project_id) || !fs::exists(dir / kProjectFile)) {
    throw NotFoundError(ErrorCode::unknown_project, "unknown project '" + project_id + "'");
  }
  std::shared_ptr<ProjectStore> store = ProjectStore::open(dir, options_);
  open_[project_id] = store;
  return store;
}

std::vector<std::string> Store::project_ids() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(data_dir_)) {
    if (entry.is_directory() && fs::exists(entry.path() / kProjectFile)) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace cal
