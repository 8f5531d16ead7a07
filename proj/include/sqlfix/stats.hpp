// Copyright 2026 The sqlfix Authors
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
//
// Corpus statistics: token length summaries, n-gram diversity, category
// histograms, correlation. Tokenization is whitespace splitting after
// collapsing runs; reports label it so numbers are comparable.

#ifndef SQLFIX_STATS_HPP_
#define SQLFIX_STATS_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqlfix/domain.hpp"

namespace sqlfix {

struct LengthStats {
  double mean = 0.0;
  std::int64_t max = 0;
};

// Whitespace token counts over the corpus. Throws std::invalid_argument
// on an empty corpus.
LengthStats length_stats(const std::vector<std::string>& texts);

// distinct n-grams / total n-grams, windows taken within each text.
// Throws std::invalid_argument when n < 1 or no text yields an n-gram.
double diversity_ratio(const std::vector<std::string>& texts, int n);

// Standard Pearson coefficient. Throws std::invalid_argument on length
// mismatch, fewer than two points, or zero variance in either series.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

// Plot-ready [0,1] rescaling; a constant series maps to all zeros.
// Throws std::invalid_argument on empty input.
std::vector<double> min_max_normalize(const std::vector<double>& xs);

struct StatsReport {
  int n_tasks = 0;
  std::string tokenizer = "whitespace";
  LengthStats user_query_len;
  LengthStats issue_sql_len;
  LengthStats solution_sql_len;
  std::optional<double> user_query_diversity;  // n-gram, unset if too short
  std::optional<double> issue_sql_diversity;
  int ngram = 3;
  std::map<Category, int> categories;
  std::optional<double> correlation;  // caller-supplied paired series
};

// Aggregate report over a task set. Multi-statement fields are joined
// with newlines before counting.
StatsReport dataset_stats(const std::vector<TaskInstance>& tasks,
                          int ngram = 3);

}  // namespace sqlfix

#endif  // SQLFIX_STATS_HPP_
