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

#include <stdexcept>
#include <string>
#include <string_view>

namespace cal {

/// Machine-readable failure kinds. Every exception thrown by the library
/// carries exactly one of these; the HTTP layer maps each to a fixed status.
enum class ErrorCode {
  syntax_error,
  schema_error,
  format_error,
  bad_request,
  unknown_route,
  missing_identity,
  not_a_member,
  unknown_project,
  unknown_conversation,
  unknown_utterance,
  unknown_category,
  unknown_option,
  unknown_session,
  no_wizard,
  duplicate_id,
  version_conflict,
  finished,
  at_root,
  session_expired,
  disabled_option,
  hidden_category,
  invalid_value,
  rule_contradiction,
  kind_error,
  too_few_annotators,
  io_error,
  internal,
};

/// Stable upper-case identifier, e.g. "VERSION_CONFLICT".
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string path = {})
      : std::runtime_error(message), code_(code), path_(std::move(path)) {}

  ErrorCode code() const noexcept { return code_; }
  /// JSON path of the offending element, empty when not applicable.
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorCode code_;
  std::string path_;
};

class SyntaxError : public Error {
 public:
  explicit SyntaxError(const std::string& message)
      : Error(ErrorCode::syntax_error, message) {}
};

class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message)
      : Error(ErrorCode::schema_error, message, std::move(path)) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message, std::string path = {})
      : Error(ErrorCode::format_error, message, std::move(path)) {}
};

class NotFoundError : public Error {
 public:
  NotFoundError(ErrorCode code, const std::string& message) : Error(code, message) {}
};

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(const std::string& message)
      : Error(ErrorCode::duplicate_id, message) {}
};

class VersionConflictError : public Error {
 public:
  explicit VersionConflictError(const std::string& message)
      : Error(ErrorCode::version_conflict, message) {}
};

/// A value rejected by the rule engine. Subclasses narrow the reason.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorCode::invalid_value, message) {}

 protected:
  ValidationError(ErrorCode code, const std::string& message) : Error(code, message) {}
};

class DisabledOptionError : public ValidationError {
 public:
  explicit DisabledOptionError(const std::string& message)
      : ValidationError(ErrorCode::disabled_option, message) {}
};

class HiddenCategoryError : public ValidationError {
 public:
  explicit HiddenCategoryError(const std::string& message)
      : ValidationError(ErrorCode::hidden_category, message) {}
};

/// The rule set cannot reach a consistent fixed point for a selection.
class ContradictionError : public ValidationError {
 public:
  explicit ContradictionError(const std::string& message)
      : ValidationError(ErrorCode::rule_contradiction, message) {}
};

class NoWizardError : public Error {
 public:
  explicit NoWizardError(const std::string& message) : Error(ErrorCode::no_wizard, message) {}
};

class FinishedSessionError : public Error {
 public:
  explicit FinishedSessionError(const std::string& message)
      : Error(ErrorCode::finished, message) {}
};

class AtRootError : public Error {
 public:
  explicit AtRootError(const std::string& message) : Error(ErrorCode::at_root, message) {}
};

class SessionExpiredError : public Error {
 public:
  explicit SessionExpiredError(const std::string& message)
      : Error(ErrorCode::session_expired, message) {}
};

class KindError : public Error {
 public:
  explicit KindError(const std::string& message) : Error(ErrorCode::kind_error, message) {}
};

class TooFewAnnotatorsError : public Error {
 public:
  explicit TooFewAnnotatorsError(const std::string& message)
      : Error(ErrorCode::too_few_annotators, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorCode::io_error, message) {}
};

}  // namespace cal
