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


// Operations CLI: serve, validate, create, import, export, agreement.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "cal/api.hpp"
#include "cal/config.hpp"
#include "cal/errors.hpp"
#include "cal/metrics.hpp"
#include "cal/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cal::IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw cal::IoError("cannot write " + path.string());
}

fs::path resolve_data_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("CAL_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return "data";
}

void print_findings(const cal::ValidationReport& report) {
  for (const auto& f : report.errors) std::cout << "ERROR " << f.path << ": " << f.message << "\n";
  for (const auto& f : report.warnings) std::cout << "WARN " << f.path << ": " << f.message << "\n";
}

// A document with "code_sets" is a project; anything else a single code set.
int run_validate(const fs::path& path) {
  const std::string text = read_file(path);
  cal::ValidationReport report;
  try {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw cal::SyntaxError(e.what());
    }
    if (doc.is_object() && doc.contains("code_sets")) {
      report = cal::validate_project(cal::project_from_json(doc));
    } else {
      cal::CodeSetConfig code_set = cal::code_set_from_json(doc);
      report = cal::validate_code_set(code_set);
      if (report.accepted()) {
        report.merge(cal::detect_wizard_conflicts(code_set));
        report.merge(cal::detect_rule_contradictions(code_set));
      }
    }
  } catch (const cal::Error& e) {
    report.error(e.path().empty() ? "$" : e.path(), e.what());
  }
  print_findings(report);
  std::cout << (report.accepted() ? "OK" : "REJECTED") << " " << path.string() << "\n";
  return report.accepted() ? 0 : 1;
}

int run_create(cal::Store& store, const fs::path& config_path, const std::string& creator) {
  const cal::ProjectConfig config = cal::parse_project(read_file(config_path));
  try {
    auto project = store.create_project(config, creator, config_path.parent_path());
    std::cout << "created " << config.id << " with " << project->conversations().size()
              << " conversations\n";
  } catch (const cal::InvalidConfigError& e) {
    print_findings(e.report());
    return 1;
  }
  return 0;
}

int run_import(cal::Store& store, const std::string& project_id, const fs::path& file) {
  json doc;
  try {
    doc = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw cal::FormatError(std::string("transcript is not valid JSON: ") + e.what());
  }
  const std::size_t n = store.project(project_id)->import_conversations(doc);
  std::cout << "imported " << n << " conversations into " << project_id << "\n";
  return 0;
}

int run_export(cal::Store& store, const std::string& project_id, const std::string& annotator,
               const fs::path& out_dir) {
  auto project = store.project(project_id);
  std::vector<std::string> annotators =
      annotator.empty() ? project->config().annotators : std::vector<std::string>{annotator};
  for (const auto& id : annotators) {
    if (!project->config().is_annotator(id)) {
      throw cal::Error(cal::ErrorCode::not_a_member, "'" + id + "' is not an annotator");
    }
    const fs::path dir = annotator.empty() ? out_dir / id : out_dir;
    const fs::path utterances = dir / (project_id + ".csv");
    const fs::path conversations = dir / (project_id + "-conversations.csv");
    write_file(utterances, project->export_csv(id));
    write_file(conversations, project->export_conversations_csv(id));
    std::cout << "wrote " << utterances.string() << "\n"
              << "wrote " << conversations.string() << "\n";
  }
  return 0;
}

int run_agreement(cal::Store& store, const std::string& project_id, const fs::path& out) {
  const cal::metrics::AgreementReport report = store.project(project_id)->agreement_report();
  std::cout << cal::metrics::render_text(report);
  write_file(out, cal::metrics::to_json(report).dump(2) + "\n");
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int run_serve(cal::Store& store, const std::string& host, int port, const fs::path& ui_dir) {
  cal::ApiService service(store, {});
  httplib::Server server;
  service.mount(server, ui_dir);
  std::cout << "listening on http://" << host << ":" << port << " (data "
            << store.data_dir().string() << ")" << std::endl;
  if (!server.listen(host, port)) {
    std::cerr << "cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CAL conversational-data labeling service"};
  app.require_subcommand(1);
  std::string data_dir_flag;
  app.add_option("--data-dir", data_dir_flag, "Data directory (default: $CAL_DATA_DIR or ./data)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string host = "127.0.0.1";
  int port = 8750;
  std::string ui_dir;
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Bind port")->capture_default_str();
  serve->add_option("--ui-dir", ui_dir, "Static UI files served under /");
  serve->add_option("--data-dir", data_dir_flag, "Data directory");

  auto* validate = app.add_subcommand("validate", "Check a project or code set file");
  std::string config_path;
  validate->add_option("config", config_path)->required();

  auto* create = app.add_subcommand("create", "Create a project from a configuration file");
  std::string creator;
  create->add_option("config", config_path)->required();
  create->add_option("--creator", creator, "Creator annotator id")->required();

  auto* import = app.add_subcommand("import", "Import a transcript into a project");
  std::string project_id;
  std::string file;
  import->add_option("project", project_id)->required();
  import->add_option("file", file)->required();

  auto* export_cmd = app.add_subcommand("export", "Write label CSV files");
  std::string annotator;
  std::string out = ".";
  export_cmd->add_option("project", project_id)->required();
  export_cmd->add_option("--annotator", annotator, "Only this annotator (default: all)");
  export_cmd->add_option("--out", out, "Output directory")->capture_default_str();

  auto* agreement = app.add_subcommand("agreement", "Print pairwise agreement");
  std::string agreement_out = "agreement.json";
  agreement->add_option("project", project_id)->required();
  agreement->add_option("--out", agreement_out, "JSON report path")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return run_validate(config_path);
    cal::Store store(resolve_data_dir(data_dir_flag));
    if (serve->parsed()) return run_serve(store, host, port, ui_dir);
    if (create->parsed()) return run_create(store, config_path, creator);
    if (import->parsed()) return run_import(store, project_id, file);
    if (export_cmd->parsed()) return run_export(store, project_id, annotator, out);
    if (agreement->parsed()) return run_agreement(store, project_id, agreement_out);
  } catch (const cal::Error& e) {
    std::cerr << cal::error_code_name(e.code()) << ": " << e.what();
    if (!e.path().empty()) std::cerr << " at " << e.path();
    std::cerr << "\n";
    return 1;
  }
  return 0;
}
