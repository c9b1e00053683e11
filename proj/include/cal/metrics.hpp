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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cal/config.hpp"
#include "cal/rational.hpp"
#include "cal/rules.hpp"

namespace cal::metrics {

/// One annotator's labels for one category, keyed by example.
using LabelMap = std::map<std::string, SelectedValue>;

/// |A ∩ B| / |A ∪ B| over (example, option) pairs; 1 when both are empty.
Rational jaccard_agreement(const LabelMap& a, const LabelMap& b);

/// Chance-corrected agreement over the examples both annotators labeled.
/// nullopt is the UNDEFINED sentinel (no common examples, or p_e = 1).
/// Throws KindError unless `category` is single-choice.
std::optional<Rational> cohens_kappa(const LabelMap& a, const LabelMap& b,
                                     const Category& category);

struct CategoryAgreement {
  std::string code_set_id;
  std::string category_id;
  Rational jaccard;
  std::optional<Rational> kappa;
  int n_common = 0;
};

struct PairAgreement {
  std::string annotator_a;
  std::string annotator_b;
  std::vector<CategoryAgreement> per_category;
};

struct AgreementReport {
  std::string project_id;
  std::vector<PairAgreement> pairs;
};

/// labels[annotator][code_set_id + "/" + category_id]
using ProjectLabels = std::map<std::string, std::map<std::string, LabelMap>>;

std::string label_key(const std::string& code_set_id, const std::string& category_id);

/// All unordered annotator pairs (a < b) times every single and multi
/// category, in code set then category order. Throws TooFewAnnotatorsError.
AgreementReport agreement_report(const ProjectConfig& project, const ProjectLabels& labels);

nlohmann::json to_json(const AgreementReport& report);
/// Aligned plain-text table.
std::string render_text(const AgreementReport& report);

}  // namespace cal::metrics
