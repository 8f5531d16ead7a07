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

#include "sqlfix/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "sqlfix/sqltext.hpp"

namespace sqlfix {

LengthStats length_stats(const std::vector<std::string>& texts) {
  if (texts.empty()) {
    throw std::invalid_argument("length_stats on an empty corpus");
  }
  LengthStats out;
  std::int64_t total = 0;
  for (const auto& text : texts) {
    std::int64_t n = static_cast<std::int64_t>(sqltext::count_tokens_ws(text));
    total += n;
    out.max = std::max(out.max, n);
  }
  out.mean = static_cast<double>(total) / static_cast<double>(texts.size());
  return out;
}

double diversity_ratio(const std::vector<std::string>& texts, int n) {
  if (n < 1) throw std::invalid_argument("n-gram size must be at least 1");
  std::set<std::string> distinct;
  std::int64_t total = 0;
  for (const auto& text : texts) {
    std::vector<std::string> tokens = sqltext::tokenize_ws(text);
    if (static_cast<int>(tokens.size()) < n) continue;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (int k = 1; k < n; ++k) {
        gram += ' ';
        gram += tokens[i + k];
      }
      distinct.insert(std::move(gram));
      ++total;
    }
  }
  if (total == 0) {
    throw std::invalid_argument("corpus yields no n-grams");
  }
  return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("series lengths differ");
  }
  if (xs.size() < 2) {
    throw std::invalid_argument("need at least two points");
  }
  double n = static_cast<double>(xs.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mean_x;
    double dy = ys[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw std::invalid_argument("zero variance");
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> min_max_normalize(const std::vector<double>& xs) {
  if (xs.empty()) {
    throw std::invalid_argument("cannot normalize an empty series");
  }
  double lo = *std::min_element(xs.begin(), xs.end());
  double hi = *std::max_element(xs.begin(), xs.end());
  std::vector<double> out(xs.size(), 0.0);
  if (hi == lo) return out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = (xs[i] - lo) / (hi - lo);
  }
  return out;
}

StatsReport dataset_stats(const std::vector<TaskInstance>& tasks, int ngram) {
  if (tasks.empty()) {
    throw std::invalid_argument("dataset is empty");
  }
  StatsReport report;
  report.n_tasks = static_cast<int>(tasks.size());
  report.ngram = ngram;

  std::vector<std::string> queries;
  std::vector<std::string> issues;
  std::vector<std::string> solutions;
  std::map<Category, int> histogram;
  for (const auto& task : tasks) {
    queries.push_back(task.user_query);
    std::string issue;
    for (const auto& s : task.issue_sql) {
      if (!issue.empty()) issue += "\n";
      issue += s;
    }
    issues.push_back(std::move(issue));
    std::string solution;
    for (const auto& s : task.solution_sql) {
      if (!solution.empty()) solution += "\n";
      solution += s;
    }
    solutions.push_back(std::move(solution));
    histogram[task.category] += 1;
  }

  report.user_query_len = length_stats(queries);
  report.issue_sql_len = length_stats(issues);
  report.solution_sql_len = length_stats(solutions);
  try {
    report.user_query_diversity = diversity_ratio(queries, ngram);
  } catch (const std::invalid_argument&) {
    // Too short for any n-gram; the field stays unset.
  }
  try {
    report.issue_sql_diversity = diversity_ratio(issues, ngram);
  } catch (const std::invalid_argument&) {
  }
  report.categories = std::move(histogram);
  return report;
}

}  // namespace sqlfix
