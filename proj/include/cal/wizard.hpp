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

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cal/config.hpp"
#include "cal/rules.hpp"

namespace cal::wizard {

struct Step {
  std::string question;
  bool answer = false;
  friend bool operator==(const Step&, const Step&) = default;
};

enum class Status { active, finished };

struct Result {
  std::string category_id;
  std::string option_id;
  bool notify = true;
  std::vector<Step> trail;
};

/// Walks one wizard tree a question at a time. The session keeps the flow
/// alive through a shared pointer, so it may outlive the configuration.
class Session {
 public:
  Session(std::string category_id, WizardNodePtr root);

  const std::string& category_id() const { return category_id_; }
  Status status() const { return current().is_outcome() ? Status::finished : Status::active; }
  const std::vector<Step>& trail() const { return trail_; }
  const WizardNode& current() const { return *path_.back(); }

  /// Question text while active.
  std::optional<std::string> question() const;
  /// The outcome once finished.
  std::optional<Result> result() const;

 private:
  friend std::variant<std::string, Result> answer(Session& session, bool yes);
  friend Session& back(Session& session);

  std::string category_id_;
  WizardNodePtr root_;
  std::vector<const WizardNode*> path_;
  std::vector<Step> trail_;
};

/// Either the next question or the final result.
using AnswerOutcome = std::variant<std::string, Result>;

/// Throws NoWizardError when the category has no flow.
Session start(const CodeSetConfig& code_set, const std::string& category_id);

/// Throws FinishedSessionError once an outcome has been reached.
AnswerOutcome answer(Session& session, bool yes);

/// Undoes the last answer. Throws AtRootError on an empty trail.
Session& back(Session& session);

/// Enters the outcome with origin auto_wizard and runs the rule cascade.
/// Throws DisabledOptionError when the outcome is currently disabled.
Resolution apply_result(const CodeSetConfig& code_set, const SelectionSet& selections,
                        ExampleContext ctx, const Result& result);

/// Milliseconds since the Unix epoch, UTC.
using Clock = std::function<std::int64_t()>;
std::int64_t system_clock_ms();

/// Identifies the one live session allowed per (project, annotator,
/// example, category).
struct SessionKey {
  std::string project_id;
  std::string annotator_id;
  std::string example;
  std::string category_id;
  auto operator<=>(const SessionKey&) const = default;
};

/// Owns server-side wizard sessions. All access goes through one mutex, so
/// operations on a session are atomic with respect to each other.
class SessionRegistry {
 public:
  static constexpr std::chrono::milliseconds kDefaultIdle = std::chrono::minutes(30);

  explicit SessionRegistry(Clock clock = system_clock_ms,
                           std::chrono::milliseconds idle = kDefaultIdle);

  /// Stores `session` and returns its id; any session already open for
  /// `key` is discarded.
  std::string open(const SessionKey& key, Session session);

  /// Runs `fn(key, session)` under the registry lock. Throws
  /// NotFoundError(unknown_session) for ids never issued and
  /// SessionExpiredError for discarded or idle-expired ones.
  template <typename Fn>
  auto with_session(const std::string& id, Fn&& fn) {
    std::lock_guard lock(mutex_);
    Entry& entry = live_entry(id);
    entry.last_used = clock_();
    return fn(static_cast<const SessionKey&>(entry.key), entry.session);
  }

  void close(const std::string& id);
  std::size_t live_count() const;

 private:
  struct Entry {
    SessionKey key;
    Session session;
    std::int64_t last_used;
  };

  Entry& live_entry(const std::string& id);
  // By value: callers may pass a reference into by_key_, which this erases.
  void retire(std::string id, std::int64_t now);
  std::string next_id();

  Clock clock_;
  std::int64_t idle_ms_;
  mutable std::mutex mutex_;
  std::map<std::string, Entry> sessions_;
  std::map<SessionKey, std::string> by_key_;
  std::map<std::string, std::int64_t> retired_;
  std::uint64_t counter_ = 0;
  std::uint64_t salt_;
};

}  // namespace cal::wizard
