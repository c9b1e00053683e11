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

#include "cal/errors.hpp"

namespace cal {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::syntax_error: return "SYNTAX_ERROR";
    case ErrorCode::schema_error: return "SCHEMA_ERROR";
    case ErrorCode::format_error: return "FORMAT_ERROR";
    case ErrorCode::bad_request: return "BAD_REQUEST";
    case ErrorCode::unknown_route: return "UNKNOWN_ROUTE";
    case ErrorCode::missing_identity: return "MISSING_IDENTITY";
    case ErrorCode::not_a_member: return "NOT_A_MEMBER";
    case ErrorCode::unknown_project: return "UNKNOWN_PROJECT";
    case ErrorCode::unknown_conversation: return "UNKNOWN_CONVERSATION";
    case ErrorCode::unknown_utterance: return "UNKNOWN_UTTERANCE";
    case ErrorCode::unknown_category: return "UNKNOWN_CATEGORY";
    case ErrorCode::unknown_option: return "UNKNOWN_OPTION";
    case ErrorCode::unknown_session: return "UNKNOWN_SESSION";
    case ErrorCode::no_wizard: return "NO_WIZARD";
    case ErrorCode::duplicate_id: return "DUPLICATE_ID";
    case ErrorCode::version_conflict: return "VERSION_CONFLICT";
    case ErrorCode::finished: return "FINISHED";
    case ErrorCode::at_root: return "AT_ROOT";
    case ErrorCode::session_expired: return "SESSION_EXPIRED";
    case ErrorCode::disabled_option: return "DISABLED_OPTION";
    case ErrorCode::hidden_category: return "HIDDEN_CATEGORY";
    case ErrorCode::invalid_value: return "INVALID_VALUE";
    case ErrorCode::rule_contradiction: return "RULE_CONTRADICTION";
    case ErrorCode::kind_error: return "KIND_ERROR";
    case ErrorCode::too_few_annotators: return "TOO_FEW_ANNOTATORS";
    case ErrorCode::io_error: return "IO_ERROR";
    case ErrorCode::internal: return "INTERNAL";
  }
  return "INTERNAL";
}

}  // namespace cal
