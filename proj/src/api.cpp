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


#include "cal/api.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

#include <httplib.h>

namespace cal {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::syntax_error:
    case ErrorCode::schema_error:
    case ErrorCode::format_error:
    case ErrorCode::bad_request:
      return 400;
    case ErrorCode::missing_identity:
      return 401;
    case ErrorCode::not_a_member:
      return 403;
    case ErrorCode::unknown_route:
    case ErrorCode::unknown_project:
    case ErrorCode::unknown_conversation:
    case ErrorCode::unknown_utterance:
    case ErrorCode::unknown_category:
    case ErrorCode::unknown_option:
    case ErrorCode::unknown_session:
    case ErrorCode::no_wizard:
      return 404;
    case ErrorCode::duplicate_id:
    case ErrorCode::version_conflict:
    case ErrorCode::finished:
    case ErrorCode::at_root:
      return 409;
    case ErrorCode::session_expired:
      return 410;
    case ErrorCode::disabled_option:
    case ErrorCode::hidden_category:
    case ErrorCode::invalid_value:
    case ErrorCode::rule_contradiction:
    case ErrorCode::kind_error:
    case ErrorCode::too_few_annotators:
      return 422;
    case ErrorCode::io_error:
    case ErrorCode::internal:
      return 500;
  }
  return 500;
}

json error_envelope(const Error& error) {
  json out{{"code", error_code_name(error.code())}, {"message", error.what()}};
  if (!error.path().empty()) out["path"] = error.path();
  return out;
}

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

json findings_json(const std::vector<Finding>& findings) {
  json out = json::array();
  for (const auto& f : findings) out.push_back({{"path", f.path}, {"message", f.message}});
  return out;
}

ApiResponse json_response(int status, const json& body) {
  return {status, "application/json", body.dump()};
}

ApiResponse error_response(const Error& error, json envelope) {
  return json_response(http_status(error.code()), envelope);
}

Error bad_request(const std::string& message, std::string path = {}) {
  return Error(ErrorCode::bad_request, message, std::move(path));
}

json parse_body(const ApiRequest& request) {
  try {
    return json::parse(request.body);
  } catch (const json::parse_error& e) {
    throw SyntaxError(std::string("request body is not valid JSON: ") + e.what());
  }
}

const json& require_field(const json& body, const std::string& key) {
  if (!body.is_object()) throw bad_request("request body must be a JSON object", "$");
  auto it = body.find(key);
  if (it == body.end()) throw bad_request("missing required field", "$." + key);
  return *it;
}

std::string require_string(const json& body, const std::string& key) {
  const json& value = require_field(body, key);
  if (!value.is_string()) throw bad_request("expected string", "$." + key);
  return value.get<std::string>();
}

ExampleRef require_example(const json& body) {
  try {
    return example_from_json(require_field(body, "example"));
  } catch (const FormatError& e) {
    throw bad_request(e.what(), e.path());
  }
}

std::string query(const ApiRequest& request, const std::string& key) {
  auto it = request.query.find(key);
  return it == request.query.end() ? std::string() : it->second;
}

std::string require_query(const ApiRequest& request, const std::string& key) {
  std::string value = query(request, key);
  if (value.empty()) throw bad_request("missing query parameter '" + key + "'");
  return value;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    if (end > start) out.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

json documentation_bundle(const ProjectConfig& config) {
  json code_sets = json::array();
  for (const auto& code_set : config.code_sets) {
    json categories = json::array();
    for (const auto& category : code_set.categories) {
      json options = json::array();
      for (const auto& option : category.options) {
        json o{{"id", option.id}, {"display", option.display}};
        if (option.definition) o["definition"] = *option.definition;
        options.push_back(std::move(o));
      }
      categories.push_back({{"id", category.id},
                            {"name", category.name},
                            {"kind", to_string(category.kind)},
                            {"definition", category.definition},
                            {"examples", category.examples},
                            {"speaker_filter", to_string(category.speaker_filter)},
                            {"options", std::move(options)},
                            {"has_wizard", code_set.find_wizard(category.id) != nullptr}});
    }
    code_sets.push_back({{"id", code_set.id},
                         {"name", code_set.name},
                         {"scope", to_string(code_set.scope)},
                         {"categories", std::move(categories)}});
  }
  return {{"code_sets", std::move(code_sets)}};
}

json versions_json(const std::map<std::string, std::int64_t>& versions) {
  json out = json::object();
  for (const auto& [category_id, version] : versions) out[category_id] = version;
  return out;
}

// Selections, versions and a freshly computed state for one example.
json example_view(const ProjectStore& project, const std::string& annotator_id,
                  const ExampleRef& example) {
  const ExampleBinding binding = project.bind(example);
  const SelectionSet selections = project.get_selection_set(annotator_id, example);
  const EffectiveLabelState state = effective_state(*binding.code_set, selections, binding.context);
  return {{"example", to_json(example)},
          {"categories", state.visible_categories},
          {"selections", to_json(selections)},
          {"versions", versions_json(project.versions(annotator_id, example))},
          {"state", to_json(state)},
          {"complete", state.complete},
          {"marker", state.complete ? "check" : "exclamation"}};
}

json save_json(const SaveResult& result) {
  return {{"version", result.version},
          {"versions", versions_json(result.versions)},
          {"selections", to_json(result.resolution.selections)},
          {"state", to_json(result.resolution.state)}};
}

json utterance_json(const Utterance& u) {
  return {{"id", u.id}, {"index", u.index}, {"speaker", to_string(u.speaker)}, {"text", u.text}};
}

json progress_json(const ProgressSummary& p) {
  json per_conversation = json::array();
  for (const auto& [conversation_id, fraction] : p.per_conversation) {
    per_conversation.push_back({{"conversation_id", conversation_id},
                                {"fraction", to_json(fraction)},
                                {"display", format_percent(fraction)}});
  }
  return {{"labeled_units", p.labeled_units},
          {"total_units", p.total_units},
          {"fraction", to_json(p.fraction)},
          {"display", p.display()},
          {"per_conversation", std::move(per_conversation)},
          {"labels",
           {{"manual", p.labels.manual},
            {"auto_rule", p.labels.auto_rule},
            {"auto_wizard", p.labels.auto_wizard},
            {"total", p.labels.total()}}}};
}

json resume_json(const std::string& project_id, const std::optional<ResumePosition>& position) {
  if (!position) return nullptr;
  std::string href = "/projects/" + project_id + "/conversations/" + position->conversation_id;
  if (position->utterance_id) href += "?utterance=" + *position->utterance_id;
  return {{"conversation_id", position->conversation_id},
          {"utterance_id", position->utterance_id ? json(*position->utterance_id) : json(nullptr)},
          {"updated_at", position->updated_at},
          {"href", href}};
}

}  // namespace

std::string ApiRequest::header(const std::string& name) const {
  const std::string wanted = lower(name);
  for (const auto& [key, value] : headers) {
    if (lower(key) == wanted) return value;
  }
  return {};
}

ApiService::ApiService(Store& store, Options options)
    : store_(store),
      options_(std::move(options)),
      sessions_(options_.clock, options_.wizard_idle) {}

ApiResponse ApiService::handle(const ApiRequest& request) {
  try {
    return dispatch(request);
  } catch (const InvalidConfigError& e) {
    json envelope = error_envelope(e);
    envelope["findings"] = {{"errors", findings_json(e.report().errors)},
                            {"warnings", findings_json(e.report().warnings)}};
    return error_response(e, std::move(envelope));
  } catch (const Error& e) {
    return error_response(e, error_envelope(e));
  } catch (const json::exception& e) {
    const Error error = bad_request(e.what());
    return error_response(error, error_envelope(error));
  } catch (const std::exception& e) {
    const Error error(ErrorCode::internal, e.what());
    return error_response(error, error_envelope(error));
  }
}

ApiResponse ApiService::dispatch(const ApiRequest& request) {
  const auto parts = split_path(request.path);
  const std::string& method = request.method;
  const std::size_t n = parts.size();

  if (method == "GET" && n == 1 && parts[0] == "healthz") return {200, "text/plain", "ok"};
  if (n >= 1 && parts[0] == "projects") {
    if (n == 1 && method == "POST") return create_project(request);
    if (n >= 3) {
      const std::string& resource = parts[2];
      const bool routed =
          (method == "GET" && resource == "conversations" && (n == 3 || n == 4)) ||
          (method == "PUT" && resource == "labels" && n == 3) ||
          (method == "POST" && resource == "wizard" &&
           ((n == 4 && parts[3] == "start") ||
            (n == 5 && (parts[4] == "answer" || parts[4] == "back")))) ||
          (method == "GET" && resource == "previous" && n == 3) ||
          (method == "GET" && resource == "status" && n == 3) ||
          (method == "PUT" && resource == "resume" && n == 3);
      if (routed) {
        require_identity(request);
        std::shared_ptr<ProjectStore> project = store_.project(parts[1]);
        if (resource == "conversations") {
          return n == 3 ? list_conversations(request, *project)
                        : labeling_view(request, *project, parts[3]);
        }
        if (resource == "labels") return put_label(request, *project);
        if (resource == "wizard") {
          if (n == 4) return wizard_start(request, *project);
          return parts[4] == "answer" ? wizard_answer(request, *project, parts[3])
                                      : wizard_back(request, *project, parts[3]);
        }
        if (resource == "previous") return previous(request, *project);
        if (resource == "status") return status(request, *project);
        return put_resume(request, *project);
      }
    }
  }
  throw Error(ErrorCode::unknown_route, "no route for " + method + " " + request.path);
}

std::string ApiService::require_identity(const ApiRequest& request) const {
  std::string id = request.header("X-Annotator-Id");
  if (id.empty()) throw Error(ErrorCode::missing_identity, "X-Annotator-Id header is required");
  return id;
}

ApiService::Caller ApiService::identify(const ApiRequest& request,
                                        const ProjectStore& project) const {
  const std::string id = require_identity(request);
  const bool labels = project.config().is_annotator(id);
  const bool creator = id == project.creator();
  if (!labels && !creator) {
    throw Error(ErrorCode::not_a_member,
                "'" + id + "' is not a member of project '" + project.config().id + "'");
  }
  // Callers only ever see their own labels.
  const std::string asked = query(request, "annotator");
  if (!asked.empty() && asked != id) {
    throw Error(ErrorCode::not_a_member, "annotators may only read their own labels");
  }
  return {id, creator ? Role::creator : Role::annotator, labels};
}

ApiResponse ApiService::create_project(const ApiRequest& request) {
  const std::string creator = require_identity(request);
  const ProjectConfig config = parse_project(request.body);
  const ValidationReport report = validate_project(config);
  if (!report.accepted()) throw InvalidConfigError(report);
  store_.create_project(config, creator, options_.base_dir);
  return json_response(201, {{"id", config.id}, {"warnings", findings_json(report.warnings)}});
}

ApiResponse ApiService::list_conversations(const ApiRequest& request, ProjectStore& project) {
  const Caller caller = identify(request, project);
  const ProgressSummary progress = project.progress(caller.annotator_id);
  std::map<std::string, Rational> fractions(progress.per_conversation.begin(),
                                            progress.per_conversation.end());
  json out = json::array();
  for (const auto& c : project.conversations()) {
    json entry{{"id", c.id}, {"utterances", c.utterances.size()}};
    if (auto it = fractions.find(c.id); it != fractions.end()) {
      entry["progress"] = to_json(it->second);
      entry["display"] = format_percent(it->second);
    }
    out.push_back(std::move(entry));
  }
  return json_response(200, {{"conversations", std::move(out)}});
}

ApiResponse ApiService::labeling_view(const ApiRequest& request, ProjectStore& project,
                                      const std::string& conversation_id) {
  const Caller caller = identify(request, project);
  const std::optional<Conversation> c = project.conversation(conversation_id);
  if (!c) {
    throw NotFoundError(ErrorCode::unknown_conversation,
                        "unknown conversation '" + conversation_id + "'");
  }
  const ProjectConfig& config = project.config();
  json utterances = json::array();
  if (config.code_set_for(Scope::utterance) != nullptr) {
    for (const auto& u : c->utterances) {
      json entry = utterance_json(u);
      entry["labeling"] = example_view(project, caller.annotator_id, {c->id, u.id});
      utterances.push_back(std::move(entry));
    }
  }
  json conversation_unit = nullptr;
  if (config.code_set_for(Scope::conversation) != nullptr) {
    conversation_unit = example_view(project, caller.annotator_id, {c->id, std::nullopt});
  }
  return json_response(200, {{"project_id", config.id},
                             {"conversation_id", c->id},
                             {"annotator_id", caller.annotator_id},
                             {"utterances", std::move(utterances)},
                             {"conversation", std::move(conversation_unit)},
                             {"documentation", documentation_bundle(config)}});
}

ApiResponse ApiService::put_label(const ApiRequest& request, ProjectStore& project) {
  const Caller caller = identify(request, project);
  const json body = parse_body(request);
  LabelEdit edit;
  edit.annotator_id = caller.annotator_id;
  edit.example = require_example(body);
  edit.category_id = require_string(body, "category_id");
  if (auto it = body.find("selected"); it != body.end()) {
    if (!it->is_boolean()) throw bad_request("expected boolean", "$.selected");
    edit.selected = it->get<bool>();
  }
  VersionGuard guard = VersionGuard::absent();
  if (auto it = body.find("expected_version"); it != body.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw bad_request("expected integer or null", "$.expected_version");
    guard = VersionGuard::exact(it->get<std::int64_t>());
  }
  const ExampleBinding binding = project.bind(edit.example);
  const Category* category = binding.code_set->find_category(edit.category_id);
  if (category == nullptr) {
    throw NotFoundError(ErrorCode::unknown_category, "unknown category '" + edit.category_id + "'");
  }
  edit.value = value_from_json(*category, require_field(body, "value"));
  return json_response(200, save_json(project.save_label(edit, guard)));
}

ApiResponse ApiService::wizard_start(const ApiRequest& request, ProjectStore& project) {
  const Caller caller = identify(request, project);
  if (!caller.labels) {
    throw Error(ErrorCode::not_a_member, "'" + caller.annotator_id + "' is not an annotator");
  }
  const json body = parse_body(request);
  const ExampleRef example = require_example(body);
  const std::string category_id = require_string(body, "category_id");
  const ExampleBinding binding = project.bind(example);
  if (binding.code_set->find_category(category_id) == nullptr) {
    throw NotFoundError(ErrorCode::unknown_category, "unknown category '" + category_id + "'");
  }
  wizard::Session session = wizard::start(*binding.code_set, category_id);
  const EffectiveLabelState state = effective_state(
      *binding.code_set, project.get_selection_set(caller.annotator_id, example), binding.context);
  if (!state.is_visible(category_id)) {
    throw HiddenCategoryError("category '" + category_id + "' is hidden for this example");
  }
  const std::string question = session.question().value_or("");
  const std::string id =
      sessions_.open({project.config().id, caller.annotator_id, to_json(example).dump(),
                      category_id},
                     std::move(session));
  return json_response(201, {{"session_id", id},
                             {"category_id", category_id},
                             {"status", "active"},
                             {"question", question},
                             {"depth", 0}});
}

ApiResponse ApiService::wizard_answer(const ApiRequest& request, ProjectStore& project,
                                      const std::string& session_id) {
  const Caller caller = identify(request, project);
  const json body = parse_body(request);
  const json& answer = require_field(body, "answer");
  if (!answer.is_boolean()) throw bad_request("expected boolean", "$.answer");
  const bool yes = answer.get<bool>();

  // The label write happens under the registry lock, so no other request
  // can observe the session finished without its label applied.
  json out = sessions_.with_session(session_id, [&](const wizard::SessionKey& key,
                                                    wizard::Session& session) -> json {
    if (key.project_id != project.config().id || key.annotator_id != caller.annotator_id) {
      throw NotFoundError(ErrorCode::unknown_session, "unknown wizard session '" + session_id + "'");
    }
    wizard::AnswerOutcome outcome = wizard::answer(session, yes);
    if (const auto* question = std::get_if<std::string>(&outcome)) {
      return {{"session_id", session_id},
              {"category_id", key.category_id},
              {"status", "active"},
              {"question", *question},
              {"depth", session.trail().size()}};
    }
    const wizard::Result& result = std::get<wizard::Result>(outcome);
    SaveResult saved;
    try {
      saved = project.apply_wizard_result(caller.annotator_id,
                                          example_from_json(json::parse(key.example)), result);
    } catch (...) {
      wizard::back(session);
      throw;
    }
    json trail = json::array();
    for (const auto& step : result.trail) {
      trail.push_back({{"question", step.question}, {"answer", step.answer}});
    }
    json response = save_json(saved);
    response["session_id"] = session_id;
    response["status"] = "finished";
    response["notify"] = result.notify;
    response["result"] = {{"category_id", result.category_id},
                          {"option_id", result.option_id},
                          {"trail", std::move(trail)}};
    return response;
  });
  return json_response(200, out);
}

ApiResponse ApiService::wizard_back(const ApiRequest& request, ProjectStore& project,
                                    const std::string& session_id) {
  const Caller caller = identify(request, project);
  json out = sessions_.with_session(session_id, [&](const wizard::SessionKey& key,
                                                    wizard::Session& session) -> json {
    if (key.project_id != project.config().id || key.annotator_id != caller.annotator_id) {
      throw NotFoundError(ErrorCode::unknown_session, "unknown wizard session '" + session_id + "'");
    }
    wizard::back(session);
    return {{"session_id", session_id},
            {"category_id", key.category_id},
            {"status", "active"},
            {"question", session.question().value_or("")},
            {"depth", session.trail().size()}};
  });
  return json_response(200, out);
}

ApiResponse ApiService::previous(const ApiRequest& request, ProjectStore& project) {
  const Caller caller = identify(request, project);
  const std::string category_id = require_query(request, "category");
  const std::string option_id = require_query(request, "option");
  ExampleRef current{query(request, "exclude_conversation"), std::nullopt};
  if (const std::string u = query(request, "exclude_utterance"); !u.empty()) {
    current.utterance_id = u;
  }
  const bool has_current = !current.conversation_id.empty();
  if (has_current) project.bind(current);

  const std::optional<PreviousLabel> found =
      project.previous_labeled(caller.annotator_id, category_id, option_id, current);
  if (!found) return {204, "application/json", ""};

  json previous_json = utterance_json(found->utterance);
  previous_json["conversation_id"] = found->conversation_id;
  previous_json["labels"] =
      to_json(project.get_selection_set(caller.annotator_id, found->assignment.example));
  previous_json["saved_at"] = found->assignment.saved_at;
  previous_json["version"] = found->assignment.version;

  json out{{"category_id", category_id}, {"option_id", option_id}, {"previous", previous_json},
           {"current", nullptr}};
  if (has_current && current.utterance_id) {
    const std::optional<Conversation> c = project.conversation(current.conversation_id);
    json current_json = utterance_json(*c->find_utterance(*current.utterance_id));
    current_json["conversation_id"] = c->id;
    current_json["labels"] = to_json(project.get_selection_set(caller.annotator_id, current));
    out["current"] = std::move(current_json);
  }
  return json_response(200, out);
}

ApiResponse ApiService::status(const ApiRequest& request, ProjectStore& project) {
  const Caller caller = identify(request, project);
  const ProjectConfig& config = project.config();
  std::vector<std::string> visible;
  if (caller.role == Role::creator) {
    visible = config.annotators;
  } else {
    visible.push_back(caller.annotator_id);
  }
  json annotators = json::array();
  for (const auto& id : visible) {
    annotators.push_back({{"annotator_id", id},
                          {"progress", progress_json(project.progress(id))},
                          {"resume", resume_json(config.id, project.resume(id))}});
  }
  json out{{"project_id", config.id},
           {"caller", {{"annotator_id", caller.annotator_id},
                       {"role", caller.role == Role::creator ? "creator" : "annotator"}}},
           {"agreement_visibility", to_string(config.agreement_visibility)},
           {"annotators", std::move(annotators)}};
  if (caller.role == Role::creator || config.agreement_visibility == AgreementVisibility::all) {
    try {
      out["agreement"] = metrics::to_json(project.agreement_report());
    } catch (const TooFewAnnotatorsError& e) {
      out["agreement"] = nullptr;
      out["agreement_error"] = error_envelope(e);
    }
  }
  return json_response(200, out);
}

ApiResponse ApiService::put_resume(const ApiRequest& request, ProjectStore& project) {
  const Caller caller = identify(request, project);
  if (!caller.labels) {
    throw Error(ErrorCode::not_a_member, "'" + caller.annotator_id + "' is not an annotator");
  }
  const ExampleRef example = require_example(parse_body(request));
  project.set_resume(caller.annotator_id, example);
  return json_response(200,
                       {{"resume", resume_json(project.config().id,
                                               project.resume(caller.annotator_id))}});
}

void ApiService::mount(httplib::Server& server, const std::filesystem::path& ui_dir) {
  if (!ui_dir.empty()) server.set_mount_point("/", ui_dir.string());
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest request;
    request.method = req.method;
    request.path = req.path;
    for (const auto& [key, value] : req.params) request.query.emplace(key, value);
    for (const auto& [key, value] : req.headers) request.headers.emplace(key, value);
    request.body = req.body;
    ApiResponse response = handle(request);
    res.status = response.status;
    if (response.status != 204) res.set_content(response.body, response.content_type);
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
  server.Put(".*", handler);
  server.Delete(".*", handler);
  server.Patch(".*", handler);
}

}  // namespace cal
