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


// Acceptance run: one PASS/FAIL line per primary criterion. Limits and
// tolerances are fixed here; the exit status is non-zero if any line fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "cal/api.hpp"
#include "cal/errors.hpp"
#include "cal/metrics.hpp"
#include "cal/store.hpp"
#include "cal/wizard.hpp"
#include "oracles/journal_oracle.hpp"
#include "support/api_harness.hpp"
#include "support/generators.hpp"
#include "support/rule_explorer.hpp"
#include "support/test_env.hpp"

using namespace cal;
using nlohmann::json;
namespace fs = std::filesystem;
namespace t = cal::testing;

namespace {

constexpr int kRuleConfigs = 3000;
constexpr int kRuleDepth = 4;
constexpr double kRuleSeconds = 60.0;
constexpr int kWizardMaxDepth = 6;
constexpr int kWizardTreesPerDepth = 40;
constexpr int kDeskConversations = 30;
constexpr int kDeskSaves = 839;
constexpr double kDeskSeconds = 30.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fixed(double value, int decimals = 1) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(decimals);
  out << value;
  return out.str();
}

Outcome rule_oracle() {
  const auto start = std::chrono::steady_clock::now();
  t::Rng rng(2024);
  t::CodeSetShape shape;  // <= 3 categories x <= 3 options x <= 4 rules
  t::ExploreStats stats;
  for (int i = 0; i < kRuleConfigs; ++i) {
    CodeSetConfig cs = t::accepted_code_set(rng, shape);
    const ExampleContext ctx = t::random_context(rng, cs);
    t::explore(cs, ctx, kRuleDepth, stats);
  }
  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = stats.configs == kRuleConfigs && stats.divergences == 0 &&
             stats.safety_violations == 0 && stats.pass_bound_violations == 0 &&
             elapsed < kRuleSeconds;
  out.detail = std::to_string(stats.configs) + " configs, " + std::to_string(stats.states) +
               " states, " + std::to_string(stats.transitions) + " transitions up to length " +
               std::to_string(kRuleDepth) + ", " + std::to_string(stats.divergences) +
               " divergences, " + std::to_string(stats.safety_violations) +
               " safety violations, " + std::to_string(stats.pass_bound_violations) +
               " over the pass bound, " + fixed(elapsed) + " s (limit " + fixed(kRuleSeconds, 0) +
               " s)";
  if (!stats.first_divergence.empty()) out.detail += "; first: " + stats.first_divergence;
  return out;
}

Outcome cascade() {
  const CodeSetConfig cs = t::fixture_code_set("cascade_code_set.json");
  const ExampleContext ctx{Scope::utterance, Speaker::human};
  const Resolution initial = resolve(cs, {}, ctx);
  const Resolution selected =
      apply_selection(cs, initial.selections, ctx, "applicability", SingleValue{"not_applicable"}, true);
  const Resolution retracted = apply_selection(cs, selected.selections, ctx, "applicability",
                                               SingleValue{"not_applicable"}, false);

  const SelectionSet want_selections{
      {"applicability", {SingleValue{"not_applicable"}, Origin::manual}},
      {"clarity", {SingleValue{"skip"}, Origin::auto_rule}},
      {"politeness", {SingleValue{"skip"}, Origin::auto_rule}}};
  EffectiveLabelState want_state;
  want_state.visible_categories = {"applicability", "clarity", "politeness"};
  want_state.disabled_options = {{"clarity", "no"}, {"clarity", "yes"}, {"politeness", "no"},
                                 {"politeness", "yes"}};
  want_state.auto_selected = {{"clarity", "skip"}, {"politeness", "skip"}};
  want_state.complete = true;

  EffectiveLabelState want_initial;
  want_initial.visible_categories = want_state.visible_categories;
  want_initial.disabled_options = {{"clarity", "skip"}, {"politeness", "skip"}};

  const bool select_ok = selected.selections == want_selections && selected.state == want_state;
  const bool retract_ok = retracted.selections.empty() && retracted.state == want_initial &&
                          retracted.state == initial.state;
  return {select_ok && retract_ok,
          std::string("select Not Applicable: ") + (select_ok ? "exact" : "MISMATCH") +
              " (Skip auto-selected in clarity and politeness); deselect: " +
              (retract_ok ? "exact" : "MISMATCH") + " (both retracted, initial state restored)"};
}

struct WizardCheck {
  long paths = 0;
  long bad_paths = 0;
  long prefixes = 0;
  long identity_failures = 0;
};

void check_tree(const CodeSetConfig& cs, const std::string& category_id, WizardCheck& check) {
  const Category& category = *cs.find_category(category_id);
  // Depth-first over answer sequences.
  std::function<void(std::vector<bool>)> walk = [&](std::vector<bool> answers) {
    wizard::Session s = wizard::start(cs, category_id);
    for (bool a : answers) wizard::answer(s, a);
    if (s.status() == wizard::Status::finished) {
      ++check.paths;
      const auto r = s.result();
      if (!r || !category.has_option(r->option_id) || r->trail.size() != answers.size() || !r->notify) {
        ++check.bad_paths;
      }
      return;
    }
    if (static_cast<int>(answers.size()) > kMaxWizardDepth) {
      ++check.bad_paths;
      return;
    }
    for (bool a : {true, false}) {
      ++check.prefixes;
      wizard::Session probe = s;
      const auto trail = probe.trail();
      const auto question = probe.question();
      wizard::answer(probe, a);
      wizard::back(probe);
      if (probe.trail() != trail || probe.question() != question ||
          probe.status() != wizard::Status::active) {
        ++check.identity_failures;
      }
      auto next = answers;
      next.push_back(a);
      walk(next);
    }
  };
  walk({});
}

Outcome wizard_totality() {
  WizardCheck check;
  const CodeSetConfig grice = t::fixture_code_set("grice_code_set.json");
  for (const auto& [category_id, flow] : grice.wizards) check_tree(grice, category_id, check);

  t::Rng rng(99);
  int trees = static_cast<int>(grice.wizards.size());
  for (int depth = 0; depth <= kWizardMaxDepth; ++depth) {
    for (int i = 0; i < kWizardTreesPerDepth; ++i, ++trees) {
      CodeSetConfig cs;
      cs.id = "tree";
      Category c;
      c.id = "c";
      c.name = "c";
      for (const char* o : {"yes", "no", "maybe"}) c.options.push_back({o, o, std::nullopt});
      cs.categories = {c};
      int counter = 0;
      cs.wizards["c"] = {"c", t::random_wizard_tree(rng, {"yes", "no", "maybe"}, depth, counter)};
      if (!validate_code_set(cs).accepted()) return {false, "generated tree rejected by validation"};
      check_tree(cs, "c", check);
    }
  }
  return {check.bad_paths == 0 && check.identity_failures == 0 && check.paths > 0,
          std::to_string(trees) + " trees (4 shipped, depth 0-" + std::to_string(kWizardMaxDepth) +
              "), " + std::to_string(check.paths) + " paths, " + std::to_string(check.bad_paths) +
              " without a valid result, " + std::to_string(check.prefixes) +
              " back/answer prefixes, " + std::to_string(check.identity_failures) +
              " identity failures"};
}

Outcome metrics_oracles() {
  using metrics::LabelMap;
  auto singles = [](std::initializer_list<std::pair<const char*, const char*>> items) {
    LabelMap out;
    for (const auto& [e, o] : items) out[e] = SingleValue{o};
    return out;
  };
  const Rational jaccard = metrics::jaccard_agreement(
      singles({{"e1", "y"}, {"e2", "y"}, {"e3", "n"}, {"e4", "y"}, {"e5", "n"}}),
      singles({{"e1", "y"}, {"e2", "y"}, {"e3", "n"}, {"e4", "n"}, {"e5", "y"}, {"e6", "y"}}));

  Category yes_no;
  yes_no.id = "c";
  yes_no.options = {{"yes", "Yes", std::nullopt}, {"no", "No", std::nullopt}};
  LabelMap a, b;
  int next = 0;
  for (const auto& [oa, ob, n] : {std::tuple{"yes", "yes", 20}, std::tuple{"yes", "no", 5},
                                  std::tuple{"no", "yes", 10}, std::tuple{"no", "no", 15}}) {
    for (int i = 0; i < n; ++i, ++next) {
      a["e" + std::to_string(next)] = SingleValue{oa};
      b["e" + std::to_string(next)] = SingleValue{ob};
    }
  }
  const auto kappa = metrics::cohens_kappa(a, b, yes_no);

  Category only;
  only.id = "only";
  only.options = {{"x", "X", std::nullopt}};
  const auto degenerate = metrics::cohens_kappa(singles({{"e1", "x"}, {"e2", "x"}, {"e3", "x"}}),
                                                singles({{"e1", "x"}, {"e2", "x"}, {"e3", "x"}}), only);

  const bool j_ok = jaccard == Rational(3, 8) && format_percent(jaccard) == "37.5%";
  const bool k_ok = kappa && *kappa == Rational(2, 5);
  const bool d_ok = !degenerate.has_value();
  return {j_ok && k_ok && d_ok,
          "jaccard " + std::to_string(jaccard.numerator()) + "/" +
              std::to_string(jaccard.denominator()) + " rendered \"" + format_percent(jaccard) +
              "\" (want 3/8, \"37.5%\"); kappa " +
              (kappa ? std::to_string(kappa->numerator()) + "/" + std::to_string(kappa->denominator())
                     : std::string("UNDEFINED")) +
              " (want exactly 2/5); single-option kappa " +
              (degenerate ? std::string("a number") : std::string("UNDEFINED")) + " (want UNDEFINED)"};
}

Outcome desk_replay() {
  const auto start = std::chrono::steady_clock::now();
  t::TempDir tmp;
  t::Rng rng(839);
  json transcript = json::array();
  long utterance_count = 0;
  for (int c = 0; c < kDeskConversations; ++c) {
    json utterances = json::array();
    const int n = t::uniform(rng, 10, 20);
    for (int u = 0; u < n; ++u, ++utterance_count) {
      utterances.push_back({{"speaker", u % 2 ? "bot" : "human"},
                            {"text", "conversation " + std::to_string(c) + ", turn " + std::to_string(u)}});
    }
    transcript.push_back({{"id", "conv-" + std::to_string(c)}, {"utterances", utterances}});
  }

  ProjectConfig config = t::fixture_project();
  config.id = "desk";
  config.data_ref.clear();
  ProjectStore::Options options;
  options.sync_writes = true;
  const fs::path dir = tmp.path() / "desk";
  auto store = ProjectStore::create(dir, config, "carol", options);
  store->import_conversations(transcript);

  // The annotator works through conversations in order: each applicable
  // utterance category, then the conversation categories. Some labels come
  // from the wizard and some are corrections of an earlier label.
  const CodeSetConfig& utterance_set = *config.code_set_for(Scope::utterance);
  const CodeSetConfig& conversation_set = *config.code_set_for(Scope::conversation);
  int saves = 0;
  int refused = 0;
  std::vector<std::pair<ExampleRef, std::string>> done;
  auto save = [&](const ExampleRef& example, const Category& category, const CodeSetConfig& cs) {
    try {
      if (cs.find_wizard(category.id) && t::chance(rng, 0.15)) {
        wizard::Session s = wizard::start(cs, category.id);
        while (s.status() == wizard::Status::active) wizard::answer(s, t::chance(rng, 0.5));
        store->apply_wizard_result("alice", example, *s.result());
      } else {
        SelectedValue value = SingleValue{t::pick(rng, category.options).id};
        if (category.kind == CategoryKind::multi) value = MultiValue{{t::pick(rng, category.options).id}};
        store->save_label({"alice", example, category.id, value, true, Origin::manual},
                          VersionGuard::any());
      }
      ++saves;
      done.emplace_back(example, category.id);
    } catch (const ValidationError&) {
      ++refused;
    }
  };
  const auto conversations = store->conversations();
  for (const auto& c : conversations) {
    for (const auto& u : c.utterances) {
      const ExampleContext ctx{Scope::utterance, u.speaker};
      for (const auto& id : applicable_categories(utterance_set, ctx)) {
        if (saves >= kDeskSaves) break;
        save({c.id, u.id}, *utterance_set.find_category(id), utterance_set);
      }
    }
    for (const auto& category : conversation_set.categories) {
      if (saves >= kDeskSaves) break;
      save({c.id, std::nullopt}, category, conversation_set);
    }
  }
  // Corrections: flip earlier single-choice labels until the budget is spent.
  while (saves < kDeskSaves) {
    const auto& [example, category_id] = t::pick(rng, done);
    const CodeSetConfig& cs = example.utterance_id ? utterance_set : conversation_set;
    const Category& category = *cs.find_category(category_id);
    if (category.kind != CategoryKind::single) continue;
    const auto current = store->get_selection_set("alice", example);
    auto it = current.find(category_id);
    if (it == current.end()) continue;
    const std::string now = std::get<SingleValue>(it->second.value).option_id;
    for (const auto& o : category.options) {
      if (o.id == now) continue;
      try {
        store->save_label({"alice", example, category_id, SingleValue{o.id}, true, Origin::manual},
                          VersionGuard::any());
        ++saves;
      } catch (const ValidationError&) {
        ++refused;
      }
      break;
    }
  }

  const ProgressSummary progress = store->progress("alice");
  const std::string csv = store->export_csv("alice");
  const std::string conv_csv = store->export_conversations_csv("alice");
  const json state = store->dump_state();
  const std::size_t records = store->journal_records();
  store.reset();

  // Independent count from the raw journal: a unit is complete when every
  // category that applies to it holds a live label.
  const auto journal = oracle::read_journal((dir / "journal.jsonl").string());
  const auto live = oracle::live_labels(journal);
  long oracle_complete = 0;
  long oracle_units = 0;
  long live_utterance_labels = 0;
  long live_conversation_labels = 0;
  for (const auto& [key, label] : live) {
    (label.utterance_id.empty() ? live_conversation_labels : live_utterance_labels)++;
  }
  auto labeled = [&](const std::string& example_key, const std::string& category_id) {
    return live.count({"alice", example_key, category_id}) > 0;
  };
  for (const auto& c : conversations) {
    for (const auto& u : c.utterances) {
      ++oracle_units;
      bool all = true;
      for (const auto& category : utterance_set.categories) {
        const bool applies = category.speaker_filter == SpeakerFilter::any ||
                             (category.speaker_filter == SpeakerFilter::human) == (u.speaker == Speaker::human);
        if (applies) all = all && labeled(c.id + "/" + u.id, category.id);
      }
      oracle_complete += all;
    }
    ++oracle_units;
    bool all = true;
    for (const auto& category : conversation_set.categories) all = all && labeled(c.id, category.id);
    oracle_complete += all;
  }

  // Export: one row per utterance or conversation plus a header, and one
  // filled cell per live label.
  auto count_cells = [](const std::string& text, std::size_t fixed_columns, long& rows, long& filled) {
    rows = 0;
    filled = 0;
    std::size_t column = 0;
    bool quoted = false;
    bool empty = true;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char ch = text[i];
      if (quoted) {
        if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
          ++i;
        } else if (ch == '"') {
          quoted = false;
        }
        empty = false;
        continue;
      }
      if (ch == '"') {
        quoted = true;
      } else if (ch == ',' || ch == '\r') {
        if (rows > 0 && column >= fixed_columns && !empty) ++filled;
        empty = true;
        if (ch == ',') {
          ++column;
        } else {
          ++rows;
          column = 0;
          ++i;  // '\n'
        }
      } else {
        empty = false;
      }
    }
  };
  long csv_rows = 0, csv_filled = 0, conv_rows = 0, conv_filled = 0;
  count_cells(csv, 4, csv_rows, csv_filled);
  count_cells(conv_csv, 1, conv_rows, conv_filled);

  const auto reopened = ProjectStore::open(dir, options);
  const bool replay_ok = reopened->dump_state() == state && journal.size() == records;
  const double elapsed = seconds_since(start);

  const bool ok = saves == kDeskSaves && records == static_cast<std::size_t>(1 + kDeskSaves) &&
                  progress.labeled_units == oracle_complete && progress.total_units == oracle_units &&
                  csv_rows == 1 + utterance_count && conv_rows == 1 + kDeskConversations &&
                  csv_filled == live_utterance_labels && conv_filled == live_conversation_labels &&
                  replay_ok && elapsed < kDeskSeconds;
  return {ok, std::to_string(kDeskConversations) + " conversations, " +
                  std::to_string(utterance_count) + " utterances, " + std::to_string(saves) +
                  " saves (" + std::to_string(refused) + " refused by rules), " +
                  std::to_string(records) + " journal records; progress " +
                  std::to_string(progress.labeled_units) + "/" + std::to_string(progress.total_units) +
                  " = " + progress.display() + " vs journal count " + std::to_string(oracle_complete) +
                  "/" + std::to_string(oracle_units) + "; export rows " + std::to_string(csv_rows) +
                  "+" + std::to_string(conv_rows) + ", filled cells " + std::to_string(csv_filled) +
                  "+" + std::to_string(conv_filled) + " vs live labels " +
                  std::to_string(live_utterance_labels) + "+" +
                  std::to_string(live_conversation_labels) + "; replay " +
                  (replay_ok ? "identical" : "DIFFERS") + "; " + fixed(elapsed) + " s (limit " +
                  fixed(kDeskSeconds, 0) + " s, fsync on)"};
}

Outcome crash_safety() {
  t::TempDir tmp;
  long cuts = 0;
  long corrupted = 0;
  std::vector<std::string> kinds;
  // Each scenario ends with a different record kind.
  const std::vector<std::pair<std::string, std::function<void(ProjectStore&)>>> last_records{
      {"assignment (3-key cascade)",
       [](ProjectStore& s) {
         s.save_label({"alice", {"c1", std::nullopt}, "issues", MultiValue{{"off_topic"}}, true,
                       Origin::manual},
                      {});
         s.save_label({"alice", {"c1", std::nullopt}, "coherent", SingleValue{"yes"}, true,
                       Origin::manual},
                      {});
       }},
      {"wizard assignment",
       [](ProjectStore& s) {
         s.apply_wizard_result("bob", {"c2", "c2#2"}, {"topic_change", "yes", true, {}});
       }},
      {"resume", [](ProjectStore& s) { s.set_resume("bob", {"c3", "u2"}); }},
      {"import",
       [](ProjectStore& s) {
         s.import_conversations(json::parse(
             R"([{"id": "late", "utterances": [{"speaker": "human", "text": "x, \"y\"\nz"}]}])"));
       }},
  };
  int n = 0;
  for (const auto& [name, finish] : last_records) {
    const fs::path dir = tmp.path() / ("p" + std::to_string(n++));
    auto store = ProjectStore::create(dir, t::fixture_project(), "carol", t::fast_store_options());
    store->import_conversations(t::fixture_json("grice_transcript.json"));
    store->save_label({"alice", {"c1", "c1#0"}, "relevance", SingleValue{"yes"}, true, Origin::manual}, {});
    store->save_label({"bob", {"c1", "c1#0"}, "relevance", SingleValue{"no"}, true, Origin::manual}, {});
    finish(*store);
    // State after every record but the last, by replaying the prefix.
    const json after = store->dump_state();
    store.reset();
    const fs::path journal = dir / "journal.jsonl";
    const std::string full = t::read_text(journal);
    const std::size_t cut = full.rfind('\n', full.size() - 2) + 1;
    {
      std::ofstream out(journal, std::ios::binary | std::ios::trunc);
      out << full.substr(0, cut);
    }
    const json before = ProjectStore::open(dir, t::fast_store_options())->dump_state();
    for (std::size_t len = cut; len <= full.size(); ++len) {
      {
        std::ofstream out(journal, std::ios::binary | std::ios::trunc);
        out << full.substr(0, len);
      }
      ++cuts;
      const json got = ProjectStore::open(dir, t::fast_store_options())->dump_state();
      if (got != (len == full.size() ? after : before)) ++corrupted;
    }
    kinds.push_back(name);
  }
  std::string names;
  for (const auto& k : kinds) names += (names.empty() ? "" : ", ") + k;
  return {corrupted == 0 && cuts > 0,
          std::to_string(cuts) + " truncation points across last records of kind " + names + "; " +
              std::to_string(corrupted) + " corrupted reconstructions"};
}

Outcome api_contract() {
  t::ApiHarness h;
  using t::utt;
  const json u0 = utt("c1", "c1#0");
  long failures = 0;
  long cases = 0;
  std::string first_failure;
  auto expect = [&](const std::string& what, const ApiResponse& r, int status, const std::string& code) {
    ++cases;
    const auto got = t::err(r);
    if (got.first == status && got.second == code) return;
    ++failures;
    if (first_failure.empty()) {
      first_failure = what + ": got " + std::to_string(got.first) + " " + got.second + ", want " +
                      std::to_string(status) + " " + code;
    }
  };
  // Setup for the conflict cases.
  h.put_label("alice", u0, "relevance", "yes");
  h.put_label("alice", u0, "applicability", "not_applicable", nullptr, true, "cascade-demo");
  const std::string session = h.call("POST", "/projects/grice-demo/wizard/start", "alice",
                                     {{"example", u0}, {"category_id", "manner"}})
                                  .json()["session_id"];
  const std::string wz = "/projects/grice-demo/wizard/" + session;
  json invalid_project = t::cascade_project();
  invalid_project["id"] = "broken";
  invalid_project["code_sets"] = {t::fixture_json("invalid_code_set.json")};
  json bad_data = t::cascade_project();
  bad_data["id"] = "no-data";
  bad_data["data_ref"] = "missing.json";

  expect("create: invalid rules", h.call("POST", "/projects", "carol", invalid_project), 400, "SCHEMA_ERROR");
  expect("create: repeated id", h.call("POST", "/projects", "carol", t::fixture_json("grice_project.json")), 409,
         "DUPLICATE_ID");
  expect("create: unreadable transcript", h.call("POST", "/projects", "carol", bad_data), 400, "FORMAT_ERROR");
  expect("create: malformed JSON", h.raw("POST", "/projects", "carol", "{"), 400, "SYNTAX_ERROR");
  expect("no identity", h.call("GET", "/projects/grice-demo/status", ""), 401, "MISSING_IDENTITY");
  expect("outsider", h.call("GET", "/projects/grice-demo/conversations/c1", "mallory"), 403, "NOT_A_MEMBER");
  expect("reading another annotator", h.call("GET", "/projects/grice-demo/conversations/c1", "alice", nullptr,
                                             {{"annotator", "bob"}}), 403, "NOT_A_MEMBER");
  expect("unknown route", h.call("GET", "/projects", "alice"), 404, "UNKNOWN_ROUTE");
  expect("unknown project", h.call("GET", "/projects/nope/conversations/c1", "alice"), 404, "UNKNOWN_PROJECT");
  expect("unknown conversation", h.call("GET", "/projects/grice-demo/conversations/c9", "alice"), 404,
         "UNKNOWN_CONVERSATION");
  expect("unknown utterance", h.put_label("alice", utt("c1", "nope"), "manner", "yes"), 404, "UNKNOWN_UTTERANCE");
  expect("unknown category", h.put_label("alice", u0, "sarcasm", "yes"), 404, "UNKNOWN_CATEGORY");
  expect("unknown option", h.put_label("alice", u0, "manner", "maybe"), 404, "UNKNOWN_OPTION");
  expect("previous: unknown option", h.call("GET", "/projects/grice-demo/previous", "alice", nullptr,
                                            {{"category", "manner"}, {"option", "maybe"}}), 404, "UNKNOWN_OPTION");
  expect("previous: none", h.call("GET", "/projects/grice-demo/previous", "alice", nullptr,
                                  {{"category", "manner"}, {"option", "yes"}}), 204, "");
  expect("missing field", h.call("PUT", "/projects/grice-demo/labels", "alice", {{"category_id", "manner"}}), 400,
         "BAD_REQUEST");
  expect("stale version", h.put_label("alice", u0, "relevance", "no", 0), 409, "VERSION_CONFLICT");
  expect("absent guard on a live label", h.put_label("alice", u0, "relevance", "no"), 409, "VERSION_CONFLICT");
  expect("disabled option", h.put_label("alice", u0, "clarity", "yes", 1, true, "cascade-demo"), 422,
         "DISABLED_OPTION");
  expect("hidden category", h.put_label("alice", utt("c1", "c1#1"), "topic_change", "yes"), 422,
         "HIDDEN_CATEGORY");
  expect("malformed value", h.put_label("alice", u0, "manner", 7), 422, "INVALID_VALUE");
  expect("wizard: no flow", h.call("POST", "/projects/cascade-demo/wizard/start", "alice",
                                   {{"example", u0}, {"category_id", "politeness"}}), 404, "NO_WIZARD");
  expect("wizard: unknown session", h.call("POST", "/projects/grice-demo/wizard/wz-x/answer", "alice",
                                           {{"answer", true}}), 404, "UNKNOWN_SESSION");
  expect("wizard: back at root", h.call("POST", wz + "/back", "alice"), 409, "AT_ROOT");
  expect("wizard: final answer", h.call("POST", wz + "/answer", "alice", {{"answer", true}}), 200, "");
  expect("wizard: answer after finish", h.call("POST", wz + "/answer", "alice", {{"answer", true}}), 409,
         "FINISHED");
  h.call("POST", "/projects/grice-demo/wizard/start", "alice", {{"example", u0}, {"category_id", "manner"}});
  expect("wizard: replaced session", h.call("POST", wz + "/answer", "alice", {{"answer", true}}), 410,
         "SESSION_EXPIRED");
  const std::string idle = h.call("POST", "/projects/grice-demo/wizard/start", "alice",
                                  {{"example", utt("c2", "c2#0")}, {"category_id", "manner"}})
                               .json()["session_id"];
  h.wizard_clock.advance(31 * 60 * 1000);
  expect("wizard: idle expiry", h.call("POST", "/projects/grice-demo/wizard/" + idle + "/answer", "alice",
                                       {{"answer", true}}), 410, "SESSION_EXPIRED");
  h.store.project("grice-demo")->set_fault_hook([](std::string_view stage) {
    if (stage == "mid_write") throw IoError("injected");
  });
  const json before = h.project_state("grice-demo");
  expect("write failure", h.put_label("alice", utt("c2", "c2#1"), "manner", "yes"), 500, "IO_ERROR");
  const bool unchanged = h.project_state("grice-demo") == before;
  if (!unchanged) ++failures;

  return {failures == 0,
          std::to_string(cases) + " documented (status, code) cases, " + std::to_string(failures) +
              " mismatches; 422 DISABLED_OPTION and 409 VERSION_CONFLICT included; failed write left "
              "state " + (unchanged ? "unchanged" : "CHANGED") +
              (first_failure.empty() ? "" : "; first: " + first_failure)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"rule-engine oracle", rule_oracle},
      {"cascade fixture", cascade},
      {"wizard totality", wizard_totality},
      {"metrics oracles", metrics_oracles},
      {"desk-scale replay", desk_replay},
      {"crash safety", crash_safety},
      {"api contract", api_contract},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    failed += !outcome.pass;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << ": " << outcome.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
