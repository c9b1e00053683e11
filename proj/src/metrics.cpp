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

#include "cal/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "cal/errors.hpp"

namespace cal::metrics {

using nlohmann::json;

namespace {

std::set<std::pair<std::string, std::string>> pair_set(const LabelMap& labels) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [example, value] : labels) {
    if (const auto* text = std::get_if<TextValue>(&value)) {
      out.emplace(example, text->text);
      continue;
    }
    for (const auto& option : option_ids(value)) out.emplace(example, option);
  }
  return out;
}

}  // namespace

Rational jaccard_agreement(const LabelMap& a, const LabelMap& b) {
  const auto pa = pair_set(a);
  const auto pb = pair_set(b);
  std::int64_t common = 0;
  for (const auto& p : pa) common += pb.count(p);
  const std::int64_t joined = static_cast<std::int64_t>(pa.size() + pb.size()) - common;
  if (joined == 0) return Rational(1);
  return Rational(common, joined);
}

std::optional<Rational> cohens_kappa(const LabelMap& a, const LabelMap& b,
                                     const Category& category) {
  if (category.kind != CategoryKind::single) {
    throw KindError("Cohen's kappa needs a single-choice category; '" + category.id + "' is " +
                    std::string(to_string(category.kind)));
  }
  std::map<std::string, std::int64_t> marginal_a;
  std::map<std::string, std::int64_t> marginal_b;
  std::int64_t n = 0;
  std::int64_t agree = 0;
  for (const auto& [example, value_a] : a) {
    auto it = b.find(example);
    if (it == b.end()) continue;
    const auto& option_a = std::get<SingleValue>(value_a).option_id;
    const auto& option_b = std::get<SingleValue>(it->second).option_id;
    ++n;
    ++marginal_a[option_a];
    ++marginal_b[option_b];
    if (option_a == option_b) ++agree;
  }
  if (n == 0) return std::nullopt;
  const Rational observed(agree, n);
  Rational expected(0);
  for (const auto& [option, count] : marginal_a) {
    auto it = marginal_b.find(option);
    if (it != marginal_b.end()) expected += Rational(count * it->second, n * n);
  }
  if (expected == Rational(1)) return std::nullopt;
  return (observed - expected) / (Rational(1) - expected);
}

std::string label_key(const std::string& code_set_id, const std::string& category_id) {
  return code_set_id + "/" + category_id;
}

AgreementReport agreement_report(const ProjectConfig& project, const ProjectLabels& labels) {
  if (project.annotators.size() < 2) {
    throw TooFewAnnotatorsError("agreement needs at least two annotators; project '" +
                                project.id + "' has " +
                                std::to_string(project.annotators.size()));
  }
  std::vector<std::string> annotators = project.annotators;
  std::sort(annotators.begin(), annotators.end());

  static const LabelMap kEmpty;
  auto lookup = [&](const std::string& annotator, const std::string& key) -> const LabelMap& {
    auto a = labels.find(annotator);
    if (a == labels.end()) return kEmpty;
    auto c = a->second.find(key);
    return c == a->second.end() ? kEmpty : c->second;
  };

  AgreementReport report;
  report.project_id = project.id;
  for (std::size_t i = 0; i < annotators.size(); ++i) {
    for (std::size_t j = i + 1; j < annotators.size(); ++j) {
      PairAgreement pair{annotators[i], annotators[j], {}};
      for (const auto& code_set : project.code_sets) {
        for (const auto& category : code_set.categories) {
          if (category.kind == CategoryKind::text) continue;
          const auto key = label_key(code_set.id, category.id);
          const LabelMap& la = lookup(annotators[i], key);
          const LabelMap& lb = lookup(annotators[j], key);
          CategoryAgreement row;
          row.code_set_id = code_set.id;
          row.category_id = category.id;
          row.jaccard = jaccard_agreement(la, lb);
          if (category.kind == CategoryKind::single) row.kappa = cohens_kappa(la, lb, category);
          row.n_common = static_cast<int>(std::count_if(
              la.begin(), la.end(), [&](const auto& item) { return lb.count(item.first) > 0; }));
          pair.per_category.push_back(std::move(row));
        }
      }
      report.pairs.push_back(std::move(pair));
    }
  }
  return report;
}

json to_json(const AgreementReport& report) {
  json pairs = json::array();
  for (const auto& pair : report.pairs) {
    json rows = json::array();
    for (const auto& row : pair.per_category) {
      rows.push_back({{"code_set_id", row.code_set_id},
                      {"category_id", row.category_id},
                      {"jaccard", cal::to_json(row.jaccard)},
                      {"jaccard_display", format_percent(row.jaccard)},
                      {"kappa", row.kappa ? cal::to_json(*row.kappa) : json(nullptr)},
                      {"kappa_display", row.kappa ? format_decimal(*row.kappa, 2) : "UNDEFINED"},
                      {"n_common", row.n_common}});
    }
    pairs.push_back({{"annotator_a", pair.annotator_a},
                     {"annotator_b", pair.annotator_b},
                     {"per_category", std::move(rows)}});
  }
  return {{"project_id", report.project_id}, {"pairs", std::move(pairs)}};
}

std::string render_text(const AgreementReport& report) {
  std::vector<std::vector<std::string>> rows{
      {"annotator_a", "annotator_b", "category", "jaccard", "kappa", "n_common"}};
  for (const auto& pair : report.pairs) {
    for (const auto& row : pair.per_category) {
      rows.push_back({pair.annotator_a, pair.annotator_b, row.category_id,
                      format_percent(row.jaccard),
                      row.kappa ? format_decimal(*row.kappa, 2) : "UNDEFINED",
                      std::to_string(row.n_common)});
    }
  }
  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  std::ostringstream out;
  out << "agreement for project " << report.project_id << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << std::left << std::setw(static_cast<int>(widths[i])) << row[i];
      out << (i + 1 == row.size() ? "\n" : "  ");
    }
  }
  return out.str();
}

}  // namespace cal::metrics
