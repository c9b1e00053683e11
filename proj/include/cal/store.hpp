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
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "cal/config.hpp"
#include "cal/journal.hpp"
#include "cal/metrics.hpp"
#include "cal/rational.hpp"
#include "cal/rules.hpp"
#include "cal/wizard.hpp"

namespace cal {

struct Utterance {
  std::string id;
  Speaker speaker = Speaker::human;
  std::string text;
  int index = 0;
};

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;
  std::int64_t created_at = 0;

  const Utterance* find_utterance(std::string_view utterance_id) const;
};

/// An utterance (conversation + utterance id) or a whole conversation.
struct ExampleRef {
  std::string conversation_id;
  std::optional<std::string> utterance_id;

  Scope scope() const { return utterance_id ? Scope::utterance : Scope::conversation; }
  /// "conv/utt" or "conv"; used as the example key in agreement and sessions.
  std::string key() const;
  auto operator<=>(const ExampleRef&) const = default;
};

nlohmann::json to_json(const ExampleRef& example);
/// Throws FormatError on a malformed object.
ExampleRef example_from_json(const nlohmann::json& doc);

struct LabelAssignment {
  std::string annotator_id;
  ExampleRef example;
  std::string category_id;
  SelectedValue value;
  Origin origin = Origin::manual;
  std::int64_t saved_at = 0;
  std::int64_t version = 0;
};

struct ResumePosition {
  std::string annotator_id;
  std::string conversation_id;
  std::optional<std::string> utterance_id;  // none for a conversation-level unit
  std::int64_t updated_at = 0;               // 0 when derived rather than stored
};

struct LabelCounts {
  int manual = 0;
  int auto_rule = 0;
  int auto_wizard = 0;
  int total() const { return manual + auto_rule + auto_wizard; }
};

struct ProgressSummary {
  std::string annotator_id;
  int labeled_units = 0;
  int total_units = 0;
  Rational fraction{0};
  std::vector<std::pair<std::string, Rational>> per_conversation;
  LabelCounts labels;

  std::string display() const { return format_percent(fraction); }
};

/// Optimistic-concurrency expectation on the edited (annotator, example,
/// category) key.
struct VersionGuard {
  enum class Mode { any, absent, exact };
  Mode mode = Mode::any;
  std::int64_t version = 0;

  static VersionGuard any() { return {}; }
  /// No live assignment may exist.
  static VersionGuard absent() { return {Mode::absent, 0}; }
  static VersionGuard exact(std::int64_t v) { return {Mode::exact, v}; }
};

struct LabelEdit {
  std::string annotator_id;
  ExampleRef example;
  std::string category_id;
  SelectedValue value;
  bool selected = true;
  Origin origin = Origin::manual;
};

struct SaveResult {
  /// Version of the edited key after the save.
  std::int64_t version = 0;
  Resolution resolution;
  /// Current version of every key of the example, including retracted ones.
  std::map<std::string, std::int64_t> versions;
};

struct PreviousLabel {
  std::string conversation_id;
  Utterance utterance;
  LabelAssignment assignment;
};

/// Resolved example: the code set and context it is labeled under.
struct ExampleBinding {
  const CodeSetConfig* code_set;
  ExampleContext context;
};

/// One project's conversations and labels. Writes are serialized and
/// journaled before the in-memory index changes; reads share a lock.
class ProjectStore {
 public:
  struct Options {
    bool sync_writes = true;
    wizard::Clock clock = wizard::system_clock_ms;
  };

  static std::unique_ptr<ProjectStore> create(const std::filesystem::path& dir,
                                              ProjectConfig config, std::string creator,
                                              Options options);
  static std::unique_ptr<ProjectStore> open(const std::filesystem::path& dir, Options options);

  const ProjectConfig& config() const { return config_; }
  const std::string& creator() const { return creator_; }
  const std::filesystem::path& dir() const { return dir_; }

  /// All-or-nothing. Throws FormatError or DuplicateIdError.
  std::size_t import_conversations(const nlohmann::json& document);

  /// Applies an edit through the rule engine and persists every changed
  /// key (cascaded auto labels included) as one journal record.
  SaveResult save_label(const LabelEdit& edit, VersionGuard guard);

  /// Single-assignment form: `expected_version` none means no live
  /// assignment may exist yet. Returns the new version.
  std::int64_t save_assignment(const LabelAssignment& assignment,
                               std::optional<std::int64_t> expected_version);

  /// Applies a finished wizard outcome with origin auto_wizard.
  SaveResult apply_wizard_result(const std::string& annotator_id, const ExampleRef& example,
                                 const wizard::Result& result);

  SelectionSet get_selection_set(const std::string& annotator_id, const ExampleRef& example) const;
  std::map<std::string, std::int64_t> versions(const std::string& annotator_id,
                                               const ExampleRef& example) const;

  /// Most recently saved live utterance label by this annotator holding
  /// (category, option), excluding `exclude`. Ties: greater version, then
  /// greater example id.
  std::optional<PreviousLabel> previous_labeled(const std::string& annotator_id,
                                                const std::string& category_id,
                                                const std::string& option_id,
                                                const ExampleRef& exclude) const;

  ProgressSummary progress(const std::string& annotator_id) const;

  /// Stored position, else the first incomplete unit, else the last unit.
  std::optional<ResumePosition> resume(const std::string& annotator_id) const;
  void set_resume(const std::string& annotator_id, const ExampleRef& example);

  /// One row per utterance; label columns follow the utterance code set.
  std::string export_csv(const std::string& annotator_id) const;
  /// One row per conversation; label columns follow the conversation code set.
  std::string export_conversations_csv(const std::string& annotator_id) const;

  metrics::AgreementReport agreement_report() const;

  std::vector<Conversation> conversations() const;
  std::optional<Conversation> conversation(const std::string& conversation_id) const;
  /// Throws NotFoundError when the example or its code set does not exist.
  ExampleBinding bind(const ExampleRef& example) const;

  std::vector<LabelAssignment> live_assignments() const;
  /// Canonical dump of the index, used to compare replayed state.
  nlohmann::json dump_state() const;
  std::size_t journal_records() const;
  std::uint64_t journal_bytes() const;

  void set_fault_hook(Journal::FaultHook hook);

 private:
  struct Slot {
    std::optional<Selection> live;
    std::int64_t version = 0;
    std::int64_t saved_at = 0;
  };
  using ExampleSlots = std::map<std::string, Slot>;
  // (saved_at, version, example key, example)
  using PreviousKey = std::tuple<std::int64_t, std::int64_t, std::string, ExampleRef>;

  ProjectStore(std::filesystem::path dir, ProjectConfig config, std::string creator,
               Options options);

  void replay(std::vector<nlohmann::json> records);
  void apply_record(const nlohmann::json& record);
  void append_and_apply(nlohmann::json record);
  SaveResult commit(const std::string& annotator_id, const ExampleRef& example,
                    const std::string& edited_category, const Resolution& next);
  ExampleBinding bind_locked(const ExampleRef& example) const;
  const ExampleSlots* slots(const std::string& annotator_id, const ExampleRef& example) const;
  SelectionSet selection_set_locked(const std::string& annotator_id,
                                    const ExampleRef& example) const;
  bool unit_complete(const std::string& annotator_id, const ExampleRef& example) const;
  std::vector<ExampleRef> units_locked() const;
  std::vector<Conversation> parse_transcript(const nlohmann::json& document) const;

  std::filesystem::path dir_;
  ProjectConfig config_;
  std::string creator_;
  Options options_;
  std::unique_ptr<Journal> journal_;

  mutable std::shared_mutex mutex_;
  std::vector<Conversation> conversations_;
  std::map<std::string, std::size_t> conversation_index_;
  std::map<std::string, std::map<ExampleRef, ExampleSlots>> labels_;
  std::map<std::tuple<std::string, std::string, std::string>, std::set<PreviousKey>> previous_;
  std::map<std::string, ResumePosition> resume_;
  std::int64_t seq_ = 0;
  std::size_t records_ = 0;
};

/// Projects under one data directory, one subdirectory each.
class Store {
 public:
  explicit Store(std::filesystem::path data_dir, ProjectStore::Options options = {});

  /// Validates, persists and imports the transcript named by data_ref
  /// (relative paths resolve against `base_dir`). Throws InvalidConfigError
  /// carrying the full report, or DuplicateIdError when the id is taken.
  std::shared_ptr<ProjectStore> create_project(const ProjectConfig& config,
                                               const std::string& creator,
                                               const std::filesystem::path& base_dir = {});

  /// Throws NotFoundError(unknown_project).
  std::shared_ptr<ProjectStore> project(const std::string& project_id);
  std::vector<std::string> project_ids() const;
  const std::filesystem::path& data_dir() const { return data_dir_; }

 private:
  std::filesystem::path data_dir_;
  ProjectStore::Options options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<ProjectStore>> open_;
};

/// RFC 4180 field quoting.
std::string csv_field(std::string_view value);

}  // namespace cal
