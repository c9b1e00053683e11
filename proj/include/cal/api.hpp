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

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include <json.hpp>

#include "cal/errors.hpp"
#include "cal/store.hpp"
#include "cal/wizard.hpp"

namespace httplib {
class Server;
}

namespace cal {

/// HTTP status paired with each error code. Total over ErrorCode.
int http_status(ErrorCode code);

/// Uniform error envelope {code, message, path?}.
nlohmann::json error_envelope(const Error& error);

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  /// Header names are matched case-insensitively.
  std::map<std::string, std::string> headers;
  std::string body;

  std::string header(const std::string& name) const;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// JSON API over a Store. Stateless apart from wizard sessions, which live
/// in the registry; every label write goes through the store.
class ApiService {
 public:
  struct Options {
    /// Relative data_ref paths in POST /projects resolve against this.
    std::filesystem::path base_dir;
    wizard::Clock clock = wizard::system_clock_ms;
    std::chrono::milliseconds wizard_idle = wizard::SessionRegistry::kDefaultIdle;
  };

  ApiService(Store& store, Options options);

  /// Never throws; failures become error envelopes.
  ApiResponse handle(const ApiRequest& request);

  /// Routes every API path of `server` to handle(). Static files under
  /// `ui_dir`, when given, are served from "/".
  void mount(httplib::Server& server, const std::filesystem::path& ui_dir = {});

  wizard::SessionRegistry& sessions() { return sessions_; }

 private:
  enum class Role { annotator, creator };
  struct Caller {
    std::string annotator_id;
    Role role;
    bool labels;  // listed as an annotator
  };

  ApiResponse dispatch(const ApiRequest& request);
  Caller identify(const ApiRequest& request, const ProjectStore& project) const;
  std::string require_identity(const ApiRequest& request) const;

  ApiResponse create_project(const ApiRequest& request);
  ApiResponse list_conversations(const ApiRequest& request, ProjectStore& project);
  ApiResponse labeling_view(const ApiRequest& request, ProjectStore& project,
                            const std::string& conversation_id);
  ApiResponse put_label(const ApiRequest& request, ProjectStore& project);
  ApiResponse wizard_start(const ApiRequest& request, ProjectStore& project);
  ApiResponse wizard_answer(const ApiRequest& request, ProjectStore& project,
                            const std::string& session_id);
  ApiResponse wizard_back(const ApiRequest& request, ProjectStore& project,
                          const std::string& session_id);
  ApiResponse previous(const ApiRequest& request, ProjectStore& project);
  ApiResponse status(const ApiRequest& request, ProjectStore& project);
  ApiResponse put_resume(const ApiRequest& request, ProjectStore& project);

  Store& store_;
  Options options_;
  wizard::SessionRegistry sessions_;
};

}  // namespace cal
