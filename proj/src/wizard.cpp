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

#include "cal/wizard.hpp"

#include <cstdio>
#include <random>

#include "cal/errors.hpp"

namespace cal::wizard {

Session::Session(std::string category_id, WizardNodePtr root)
    : category_id_(std::move(category_id)), root_(std::move(root)) {
  path_.push_back(root_.get());
}

std::optional<std::string> Session::question() const {
  if (current().is_outcome()) return std::nullopt;
  return current().question().text;
}

std::optional<Result> Session::result() const {
  if (!current().is_outcome()) return std::nullopt;
  return Result{category_id_, current().outcome().option_id, true, trail_};
}

Session start(const CodeSetConfig& code_set, const std::string& category_id) {
  const WizardFlow* flow = code_set.find_wizard(category_id);
  if (flow == nullptr) {
    throw NoWizardError("category '" + category_id + "' has no wizard");
  }
  return Session(category_id, flow->root);
}

AnswerOutcome answer(Session& session, bool yes) {
  if (session.status() == Status::finished) {
    throw FinishedSessionError("wizard for '" + session.category_id() + "' already finished");
  }
  const auto& q = session.current().question();
  session.trail_.push_back({q.text, yes});
  session.path_.push_back(yes ? q.yes.get() : q.no.get());
  if (auto result = session.result()) return *result;
  return *session.question();
}

Session& back(Session& session) {
  if (session.trail_.empty()) throw AtRootError("wizard is already at its first question");
  session.trail_.pop_back();
  session.path_.pop_back();
  return session;
}

Resolution apply_result(const CodeSetConfig& code_set, const SelectionSet& selections,
                        ExampleContext ctx, const Result& result) {
  const Category* category = code_set.find_category(result.category_id);
  if (category == nullptr) {
    throw NotFoundError(ErrorCode::unknown_category,
                        "unknown category '" + result.category_id + "'");
  }
  SelectedValue value = SingleValue{result.option_id};
  if (category->kind == CategoryKind::multi) value = MultiValue{{result.option_id}};
  return apply_selection(code_set, selections, ctx, result.category_id, value, true,
                         Origin::auto_wizard);
}

std::int64_t system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

SessionRegistry::SessionRegistry(Clock clock, std::chrono::milliseconds idle)
    : clock_(std::move(clock)), idle_ms_(idle.count()), salt_(std::random_device{}()) {
  salt_ = (salt_ << 32) ^ std::random_device{}();
}

std::string SessionRegistry::next_id() {
  std::mt19937_64 mix(salt_ ^ (++counter_ * 0x9E3779B97F4A7C15ULL));
  char buf[40];
  std::snprintf(buf, sizeof buf, "wz-%016llx%04llx", static_cast<unsigned long long>(mix()),
                static_cast<unsigned long long>(counter_ & 0xffff));
  return buf;
}

std::string SessionRegistry::open(const SessionKey& key, Session session) {
  std::lock_guard lock(mutex_);
  const std::int64_t now = clock_();
  std::erase_if(retired_, [&](const auto& item) { return now - item.second > 2 * idle_ms_; });
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second.last_used > idle_ms_) {
      by_key_.erase(it->second.key);
      retired_[it->first] = now;
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
  if (auto previous = by_key_.find(key); previous != by_key_.end()) {
    retire(previous->second, now);
  }
  std::string id = next_id();
  sessions_.emplace(id, Entry{key, std::move(session), now});
  by_key_[key] = id;
  return id;
}

SessionRegistry::Entry& SessionRegistry::live_entry(const std::string& id) {
  const std::int64_t now = clock_();
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    if (retired_.count(id)) throw SessionExpiredError("wizard session '" + id + "' has expired");
    throw NotFoundError(ErrorCode::unknown_session, "unknown wizard session '" + id + "'");
  }
  if (now - it->second.last_used > idle_ms_) {
    retire(id, now);
    throw SessionExpiredError("wizard session '" + id + "' has expired");
  }
  return it->second;
}

void SessionRegistry::retire(std::string id, std::int64_t now) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return;
  by_key_.erase(it->second.key);
  sessions_.erase(it);
  retired_[id] = now;
}

void SessionRegistry::close(const std::string& id) {
  std::lock_guard lock(mutex_);
  retire(id, clock_());
}

std::size_t SessionRegistry::live_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

}  // namespace cal::wizard
