/*
 * Copyright 2026 the awae authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "awae/data.hpp"
#include "awae/errors.hpp"
#include "awae/metrics.hpp"
#include "awae/rng.hpp"
#include "oracles.hpp"

using namespace awae;
using awae::testing::hypergeom_hits;

namespace {

HeldoutPair tiny_heldout(std::size_t n_users, std::size_t n_items,
                         std::size_t foldin_clicks, std::size_t truth_clicks,
                         std::uint64_t seed) {
  std::mt19937_64 rng = make_rng(seed, 0);
  std::vector<std::uint32_t> universe(n_items);
  std::iota(universe.begin(), universe.end(), 0u);
  std::vector<std::vector<std::uint32_t>> fold_rows(n_users);
  HeldoutPair pair;
  pair.truth.resize(n_users);
  for (std::size_t u = 0; u < n_users; ++u) {
    std::vector<std::uint32_t> picked;
    std::sample(universe.begin(), universe.end(), std::back_inserter(picked),
                foldin_clicks + truth_clicks, rng);
    std::shuffle(picked.begin(), picked.end(), rng);
    fold_rows[u].assign(picked.begin(), picked.begin() + foldin_clicks);
    pair.truth[u].assign(picked.begin() + foldin_clicks, picked.end());
    std::sort(pair.truth[u].begin(), pair.truth[u].end());
  }
  pair.foldin = ClickMatrix::from_rows(n_items, std::move(fold_rows));
  pair.validate();
  return pair;
}

}  // namespace

TEST_CASE("rank_items orders descending with index tie-break") {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  const std::vector<double> scores{0.1, 0.9, 0.5, 0.9, neg_inf};
  const std::vector<std::uint32_t> expected{1, 3, 2, 0, 4};
  CHECK(rank_items(scores) == expected);

  SUBCASE("all-equal scores fall back to index order") {
    const std::vector<double> flat(4, 2.5);
    CHECK(rank_items(flat) == std::vector<std::uint32_t>{0, 1, 2, 3});
  }
}

TEST_CASE("ranking metrics on the worked three-item example") {
  // Ranked [a, c, b] with truth {a, b}: a at position 1 and b at position 3.
  RankingResult r;
  r.ranked_items = {0, 2, 1};
  r.truth = {0, 1};

  CHECK(recall_at(r, 2) == 0.5);
  CHECK(dcg_at(r, 3) == doctest::Approx(1.5).epsilon(1e-15));
  // Ideal places both hits first: 1 + 1/log2(3).
  const double ideal = 1.0 + std::log(2.0) / std::log(3.0);
  CHECK(ndcg_at(r, 3) == doctest::Approx(1.5 / ideal).epsilon(1e-12));
  CHECK(ndcg_at(r, 3) == doctest::Approx(0.9197207891481876).epsilon(1e-9));

  SUBCASE("perfect ranking scores 1 everywhere") {
    RankingResult perfect;
    perfect.ranked_items = {0, 1, 2};
    perfect.truth = {0, 1};
    CHECK(recall_at(perfect, 2) == 1.0);
    CHECK(ndcg_at(perfect, 2) == 1.0);
    CHECK(ndcg_at(perfect, 3) == 1.0);
  }
}

TEST_CASE("recall divides by min(rank, truth size)") {
  RankingResult r;
  r.ranked_items = {0, 1, 2, 3, 4};
  r.truth = {0, 1, 2};
  // Two hits in the top 2, denominator min(2, 3) = 2 -> a full score.
  CHECK(recall_at(r, 2) == 1.0);
  // All three hits within rank 5, denominator min(5, 3) = 3.
  CHECK(recall_at(r, 5) == 1.0);
  // Rank beyond the item count just truncates.
  CHECK(recall_at(r, 100) == 1.0);

  RankingResult miss;
  miss.ranked_items = {4, 3, 0, 1, 2};
  miss.truth = {0, 1, 2};
  CHECK(recall_at(miss, 2) == 0.0);
  CHECK(recall_at(miss, 3) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("ranking metric contract violations throw") {
  RankingResult r;
  r.ranked_items = {0, 1, 2};
  SUBCASE("empty truth") { CHECK_THROWS_AS(recall_at(r, 1), DataError); }
  SUBCASE("unsorted truth") {
    r.truth = {2, 0};
    CHECK_THROWS_AS(recall_at(r, 1), DataError);
  }
  SUBCASE("duplicate truth") {
    r.truth = {1, 1};
    CHECK_THROWS_AS(dcg_at(r, 1), DataError);
  }
  SUBCASE("zero rank") {
    r.truth = {1};
    CHECK_THROWS_AS(recall_at(r, 0), NumericError);
    CHECK_THROWS_AS(dcg_at(r, 0), NumericError);
  }
}

TEST_CASE("evaluation masks fold-in items before ranking") {
  // One user, four items. Fold-in = {2}, truth = {0}. The scorer scores the
  // fold-in item highest; only masking lets the truth item reach the top.
  HeldoutPair pair;
  pair.foldin = ClickMatrix::from_rows(4, {{2}});
  pair.truth = {{0}};
  const BatchScorer echo = [](const DenseMatrix& batch) { return batch; };
  const MetricTable t = evaluate_with_scorer(echo, pair, {1});
  CHECK(t.lookup("recall", 1) == 1.0);
  CHECK(t.lookup("ndcg", 1) == 1.0);
}

TEST_CASE("evaluation is independent of batch boundaries") {
  const HeldoutPair pair = tiny_heldout(23, 12, 3, 2, 5);
  const BatchScorer scorer = [](const DenseMatrix& batch) {
    DenseMatrix scores(batch.rows(), batch.cols());
    for (std::size_t i = 0; i < batch.rows(); ++i) {
      double seen = 0.0;
      for (std::size_t j = 0; j < batch.cols(); ++j) seen += batch.at(i, j) * (j + 1.0);
      for (std::size_t j = 0; j < batch.cols(); ++j) {
        scores.at(i, j) = std::sin(seen + static_cast<double>(j));
      }
    }
    return scores;
  };
  const std::vector<std::size_t> rs{1, 3, 5};
  const MetricTable whole = evaluate_with_scorer(scorer, pair, rs, 512);
  for (std::size_t bs : {std::size_t{1}, std::size_t{4}, std::size_t{7}}) {
    const MetricTable chunked = evaluate_with_scorer(scorer, pair, rs, bs);
    REQUIRE(chunked.rows.size() == whole.rows.size());
    for (std::size_t i = 0; i < whole.rows.size(); ++i) {
      CHECK(chunked.rows[i].metric == whole.rows[i].metric);
      CHECK(chunked.rows[i].r == whole.rows[i].r);
      CHECK(chunked.rows[i].mean == whole.rows[i].mean);
      CHECK(chunked.rows[i].n_users == whole.rows[i].n_users);
    }
  }
}

TEST_CASE("random scores land near the hypergeometric mean") {
  // 10 items, 2 folded in (masked), truth size 2: hits in the top r of a
  // random permutation of the 8 unmasked items follow a hypergeometric law.
  const std::size_t n_users = 100, n_items = 10, foldin = 2, truth = 2;
  const HeldoutPair pair = tiny_heldout(n_users, n_items, foldin, truth, 6);
  std::mt19937_64 score_rng = make_rng(7, 0);
  const BatchScorer random_scorer = [&](const DenseMatrix& batch) {
    DenseMatrix scores(batch.rows(), batch.cols());
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (auto& v : scores.raw()) v = dist(score_rng);
    return scores;
  };

  const std::size_t r = 3;
  const MetricTable t = evaluate_with_scorer(random_scorer, pair, {r});
  const auto hg = hypergeom_hits(n_items - foldin, truth, r);
  const double expected = hg.mean / static_cast<double>(std::min(r, truth));
  const double sd_mean = std::sqrt(
      hg.variance / static_cast<double>(std::min(r, truth) * std::min(r, truth)) /
      static_cast<double>(n_users));
  CHECK(std::abs(t.lookup("recall", r) - expected) < 4.0 * sd_mean);
}

TEST_CASE("metric table rendering and lookup") {
  MetricTable t;
  t.rows.push_back({"recall", 10, 0.5, 7});
  t.rows.push_back({"ndcg", 10, 0.25, 7});

  CHECK(t.lookup("recall", 10) == 0.5);
  CHECK_THROWS_AS(t.lookup("recall", 20), DataError);
  CHECK_THROWS_AS(t.lookup("precision", 10), DataError);

  CHECK(t.to_csv() == "metric,R,mean,n_users\nrecall,10,0.5,7\nndcg,10,0.25,7\n");

  const nlohmann::json parsed = nlohmann::json::parse(t.to_json());
  REQUIRE(parsed.is_array());
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0]["metric"] == "recall");
  CHECK(parsed[0]["R"] == 10);
  CHECK(parsed[0]["mean"] == 0.5);
  CHECK(parsed[1]["metric"] == "ndcg");
  CHECK(parsed[1]["n_users"] == 7);
}

TEST_CASE("evaluation harness input validation") {
  const HeldoutPair pair = tiny_heldout(3, 6, 2, 1, 8);
  const BatchScorer good = [](const DenseMatrix& b) {
    return DenseMatrix(b.rows(), b.cols(), 0.0);
  };
  CHECK_THROWS_AS(evaluate_with_scorer(good, pair, {}), UsageError);
  CHECK_THROWS_AS(evaluate_with_scorer(good, pair, {0}), UsageError);
  CHECK_THROWS_AS(evaluate_with_scorer(good, pair, {1}, 0), NumericError);
  const BatchScorer wrong_shape = [](const DenseMatrix& b) {
    return DenseMatrix(b.rows(), b.cols() + 1, 0.0);
  };
  CHECK_THROWS_AS(evaluate_with_scorer(wrong_shape, pair, {1}), NumericError);
  HeldoutPair empty;
  CHECK_THROWS_AS(evaluate_with_scorer(good, empty, {1}), DataError);
}

TEST_CASE("metric@R strings parse or are rejected") {
  CHECK(parse_metric_at("ndcg@10") == std::pair<std::string, std::size_t>{"ndcg", 10});
  CHECK(parse_metric_at("recall@1") ==
        std::pair<std::string, std::size_t>{"recall", 1});
  CHECK_THROWS_AS(parse_metric_at("ndcg"), UsageError);
  CHECK_THROWS_AS(parse_metric_at("precision@5"), UsageError);
  CHECK_THROWS_AS(parse_metric_at("ndcg@"), UsageError);
  CHECK_THROWS_AS(parse_metric_at("ndcg@zero"), UsageError);
  CHECK_THROWS_AS(parse_metric_at("ndcg@0"), UsageError);
  CHECK_THROWS_AS(parse_metric_at("ndcg@5x"), UsageError);
}
