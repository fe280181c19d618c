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
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "awae/data.hpp"
#include "awae/matrix.hpp"

namespace awae {

// Items in descending score order plus the user's withheld truth set.
struct RankingResult {
  std::vector<std::uint32_t> ranked_items;
  std::vector<std::uint32_t> truth;  // sorted, unique, non-empty
};

// Full descending ranking of one score row. Ties break toward the smaller
// item index. Non-finite scores are allowed (-inf sinks masked items to the
// bottom).
std::vector<std::uint32_t> rank_items(std::span<const double> scores);

// Hits in the top r divided by min(r, |truth|).
double recall_at(const RankingResult& r, std::size_t rank);
// Sum over the top r of (2^hit - 1) / log2(position + 1), positions from 1.
double dcg_at(const RankingResult& r, std::size_t rank);
// dcg normalized by the best achievable dcg at this r and truth size.
double ndcg_at(const RankingResult& r, std::size_t rank);

// One row per (metric, r): the mean over held-out users and the user count.
struct MetricTable {
  struct Row {
    std::string metric;  // "recall" or "ndcg"
    std::size_t r = 0;
    double mean = 0.0;
    std::size_t n_users = 0;
  };
  std::vector<Row> rows;

  double lookup(const std::string& metric, std::size_t r) const;  // DataError if absent
  std::string to_csv() const;   // header metric,R,mean,n_users
  std::string to_json() const;
};

// Scores a dense fold-in batch (rows of 0/1 clicks), one score per item.
// Masking of fold-in items happens in the harness, not the scorer.
using BatchScorer = std::function<DenseMatrix(const DenseMatrix& foldin_batch)>;

// Ranks every held-out user with fold-in items masked to -inf and averages
// recall and ndcg at each requested r. Users are processed in order, in
// fixed-size batches, so results do not depend on batch boundaries.
MetricTable evaluate_with_scorer(const BatchScorer& scorer, const HeldoutPair& heldout,
                                 const std::vector<std::size_t>& r_list,
                                 std::size_t batch_size = 512);

// Parses "ndcg@10" / "recall@20" into a (metric, r) pair.
std::pair<std::string, std::size_t> parse_metric_at(const std::string& s);

}  // namespace awae
