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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sqlfix/stats.hpp"
#include "support/fixtures.hpp"

using namespace sqlfix;
using testsupport::load_fixture_tasks;
using testsupport::simple_task;

namespace {

// Straightforward re-implementations used as oracles; no shared code
// with the library versions.
std::vector<std::string> naive_tokens(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double naive_diversity(const std::vector<std::string>& texts, int n) {
  std::set<std::string> distinct;
  long total = 0;
  for (const auto& text : texts) {
    auto toks = naive_tokens(text);
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      std::string g;
      for (int k = 0; k < n; ++k) {
        if (k > 0) g += ' ';
        g += toks[i + k];
      }
      distinct.insert(g);
      ++total;
    }
  }
  return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

double naive_pearson(const std::vector<double>& xs,
                     const std::vector<double>& ys) {
  double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxy += xs[i] * ys[i];
    sxx += xs[i] * xs[i];
    syy += ys[i] * ys[i];
  }
  return (n * sxy - sx * sy) /
         std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

std::vector<std::string> random_corpus(int n_texts, int seed) {
  static const char* vocab[] = {"select", "from",  "where", "join",
                                "group",  "order", "sum",   "count"};
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> word(0, 7);
  std::uniform_int_distribution<int> len(1, 12);
  std::vector<std::string> texts;
  for (int i = 0; i < n_texts; ++i) {
    int n = len(rng);
    std::string text;
    for (int k = 0; k < n; ++k) {
      if (k > 0) text += ' ';
      text += vocab[word(rng)];
    }
    texts.push_back(text);
  }
  return texts;
}

}  // namespace

TEST_CASE("token length summaries") {
  LengthStats s = length_stats({"a b c", "d e", ""});
  CHECK(s.mean == doctest::Approx(5.0 / 3.0));
  CHECK(s.max == 3);

  // Runs of mixed whitespace collapse to single separators.
  LengthStats ws = length_stats({"  a\t\tb \n c  "});
  CHECK(ws.mean == 3.0);
  CHECK(ws.max == 3);

  CHECK_THROWS_WITH_AS(length_stats({}), "length_stats on an empty corpus",
                       std::invalid_argument);
}

TEST_CASE("token length summaries agree with a naive count") {
  auto texts = random_corpus(40, 7);
  LengthStats s = length_stats(texts);
  long total = 0;
  long max = 0;
  for (const auto& t : texts) {
    long n = static_cast<long>(naive_tokens(t).size());
    total += n;
    max = std::max(max, n);
  }
  CHECK(s.mean == static_cast<double>(total) / texts.size());
  CHECK(s.max == max);
}

TEST_CASE("n-gram diversity ratios") {
  CHECK(diversity_ratio({"a b c d"}, 3) == 1.0);  // "a b c", "b c d"
  CHECK(diversity_ratio({"a a a a"}, 3) == 0.5);  // "a a a" twice

  // Windows stay inside each text; nothing spans the boundary.
  CHECK(diversity_ratio({"a b", "b c"}, 2) == 1.0);

  // Texts shorter than n contribute nothing.
  CHECK(diversity_ratio({"a", "a b c"}, 3) == 1.0);

  CHECK_THROWS_WITH_AS(diversity_ratio({"a b c"}, 0),
                       "n-gram size must be at least 1",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(diversity_ratio({"a b", "c"}, 3),
                       "corpus yields no n-grams", std::invalid_argument);
  CHECK_THROWS_AS(diversity_ratio({}, 2), std::invalid_argument);
}

TEST_CASE("n-gram diversity agrees with a naive recount") {
  for (int seed : {1, 2, 3}) {
    auto texts = random_corpus(25, seed);
    for (int n : {1, 2, 3}) {
      CAPTURE(seed);
      CAPTURE(n);
      CHECK(diversity_ratio(texts, n) == naive_diversity(texts, n));
    }
  }
}

TEST_CASE("pearson correlation on pinned series") {
  CHECK(pearson({1, 2, 3, 4}, {2, 4, 6, 8}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3, 4}, {8, 6, 4, 2}) == doctest::Approx(-1.0));

  // Hand-worked: means 2 and 2, cov 1, variances 2 and 2.
  CHECK(pearson({1, 2, 3}, {1, 3, 2}) == doctest::Approx(0.5));

  // Hand-worked: cov -2, var_x 5, var_y 4.
  CHECK(pearson({1, 2, 3, 4}, {1, -1, 1, -1}) ==
        doctest::Approx(-2.0 / std::sqrt(20.0)));

  CHECK_THROWS_WITH_AS(pearson({1, 2}, {1, 2, 3}), "series lengths differ",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(pearson({1}, {2}), "need at least two points",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(pearson({3, 3, 3}, {1, 2, 3}), "zero variance",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(pearson({1, 2, 3}, {4, 4, 4}), "zero variance",
                       std::invalid_argument);
}

TEST_CASE("pearson agrees with the product-moment form") {
  std::mt19937 rng(99);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> xs;
  std::vector<double> ys;
  for (int i = 0; i < 50; ++i) {
    double x = noise(rng);
    xs.push_back(x);
    ys.push_back(0.7 * x + noise(rng));
  }
  CHECK(pearson(xs, ys) == doctest::Approx(naive_pearson(xs, ys)).epsilon(1e-12));
}

TEST_CASE("min-max normalization") {
  CHECK(min_max_normalize({3, 1, 2}) == std::vector<double>{1.0, 0.0, 0.5});
  CHECK(min_max_normalize({5, 5}) == std::vector<double>{0.0, 0.0});
  CHECK(min_max_normalize({7}) == std::vector<double>{0.0});
  CHECK_THROWS_WITH_AS(min_max_normalize({}),
                       "cannot normalize an empty series",
                       std::invalid_argument);

  // Bounds hit 0 and 1 and relative order survives.
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  std::vector<double> xs;
  for (int i = 0; i < 30; ++i) xs.push_back(dist(rng));
  std::vector<double> out = min_max_normalize(xs);
  CHECK(*std::min_element(out.begin(), out.end()) == 0.0);
  CHECK(*std::max_element(out.begin(), out.end()) == 1.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < xs.size(); ++j) {
      CHECK((xs[i] < xs[j]) == (out[i] < out[j]));
    }
  }
}

TEST_CASE("dataset report aggregates pinned values") {
  TaskInstance t1 = simple_task("s-1", "SELECT 1", "SELECT 1");
  t1.user_query = "alpha beta gamma delta";
  t1.issue_sql = {"SELECT a FROM t", "WHERE x = 1"};
  t1.solution_sql = {"SELECT a FROM t WHERE x = 2"};

  TaskInstance t2 = simple_task("s-2", "SELECT 1", "SELECT 1");
  t2.user_query = "alpha beta";
  t2.issue_sql = {"UPDATE t SET x = 1"};
  t2.solution_sql = {"UPDATE t SET x = 2"};
  t2.category = Category::kManagement;

  TaskInstance t3 = simple_task("s-3", "SELECT 1", "SELECT 1");
  t3.user_query = "alpha beta gamma delta";
  t3.issue_sql = {"SELECT a FROM t"};
  t3.solution_sql = {"SELECT 1"};

  StatsReport r = dataset_stats({t1, t2, t3});
  CHECK(r.n_tasks == 3);
  CHECK(r.tokenizer == "whitespace");
  CHECK(r.ngram == 3);

  // Query tokens 4, 2, 4. Issue statements join with a newline before
  // counting: 8, 6, 4 tokens. Solutions: 7, 6, 2.
  CHECK(r.user_query_len.mean == doctest::Approx(10.0 / 3.0));
  CHECK(r.user_query_len.max == 4);
  CHECK(r.issue_sql_len.mean == 6.0);
  CHECK(r.issue_sql_len.max == 8);
  CHECK(r.solution_sql_len.mean == 5.0);
  CHECK(r.solution_sql_len.max == 7);

  // Queries: two identical 4-token texts give the same 2 trigrams twice,
  // the 2-token text gives none: 2 distinct / 4 total.
  REQUIRE(r.user_query_diversity.has_value());
  CHECK(*r.user_query_diversity == 0.5);

  // Issues: 6 + 4 + 2 = 12 trigrams; "x = 1" repeats across the first
  // two and the third adds nothing new: 9 distinct.
  REQUIRE(r.issue_sql_diversity.has_value());
  CHECK(*r.issue_sql_diversity == 0.75);

  CHECK(r.categories.at(Category::kQueryLike) == 2);
  CHECK(r.categories.at(Category::kManagement) == 1);
  CHECK(r.categories.size() == 2);
  CHECK_FALSE(r.correlation.has_value());
}

TEST_CASE("diversity fields stay unset when texts are too short") {
  TaskInstance t = simple_task("short-1", "SELECT a FROM t", "SELECT 1");
  t.user_query = "too short";
  StatsReport r = dataset_stats({t});
  CHECK_FALSE(r.user_query_diversity.has_value());
  REQUIRE(r.issue_sql_diversity.has_value());
  CHECK(*r.issue_sql_diversity == 1.0);
}

TEST_CASE("an empty dataset is refused") {
  CHECK_THROWS_WITH_AS(dataset_stats({}), "dataset is empty",
                       std::invalid_argument);
}

TEST_CASE("the fixture dataset yields a coherent report") {
  auto tasks = load_fixture_tasks();
  StatsReport r = dataset_stats(tasks);
  CHECK(r.n_tasks == static_cast<int>(tasks.size()));
  CHECK(r.user_query_len.max > 0);
  CHECK(r.issue_sql_len.max > 0);
  CHECK(r.solution_sql_len.max > 0);
  int total = 0;
  for (const auto& [cat, count] : r.categories) total += count;
  CHECK(total == r.n_tasks);
}
