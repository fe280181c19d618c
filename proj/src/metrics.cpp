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
#include "awae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "awae/errors.hpp"
#include "awae/kv.hpp"

namespace awae {

std::vector<std::uint32_t> rank_items(std::span<const double> scores) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return order;
}

namespace {

void require_ranking(const RankingResult& r) {
  if (r.truth.empty()) throw DataError("ranking metrics: empty truth set");
  if (!std::is_sorted(r.truth.begin(), r.truth.end()) ||
      std::adjacent_find(r.truth.begin(), r.truth.end()) != r.truth.end()) {
    throw DataError("ranking metrics: truth must be sorted and unique");
  }
}

double inv_log2(std::size_t position) {  // positions start at 1
  return 1.0 / std::log2(static_cast<double>(position) + 1.0);
}

}  // namespace

double recall_at(const RankingResult& r, std::size_t rank) {
  require_ranking(r);
  if (rank == 0) throw NumericError("recall_at: rank must be >= 1");
  const std::size_t top = std::min(rank, r.ranked_items.size());
  std::size_t hits = 0;
  for (std::size_t k = 0; k < top; ++k) {
    if (std::binary_search(r.truth.begin(), r.truth.end(), r.ranked_items[k])) ++hits;
  }
  return static_cast<double>(hits) /
         static_cast<double>(std::min(rank, r.truth.size()));
}

double dcg_at(const RankingResult& r, std::size_t rank) {
  require_ranking(r);
  if (rank == 0) throw NumericError("dcg_at: rank must be >= 1");
  const std::size_t top = std::min(rank, r.ranked_items.size());
  double dcg = 0.0;
  for (std::size_t k = 0; k < top; ++k) {
    if (std::binary_search(r.truth.begin(), r.truth.end(), r.ranked_items[k])) {
      dcg += inv_log2(k + 1);  // (2^1 - 1) = 1 for binary relevance
    }
  }
  return dcg;
}

double ndcg_at(const RankingResult& r, std::size_t rank) {
  const double dcg = dcg_at(r, rank);
  double ideal = 0.0;
  const std::size_t best = std::min(rank, r.truth.size());
  for (std::size_t k = 0; k < best; ++k) ideal += inv_log2(k + 1);
  return dcg / ideal;
}

double MetricTable::lookup(const std::string& metric, std::size_t r) const {
  for (const auto& row : rows) {
    if (row.metric == metric && row.r == r) return row.mean;
  }
  throw DataError("metric table has no row " + metric + "@" + std::to_string(r));
}

std::string MetricTable::to_csv() const {
  std::string out = "metric,R,mean,n_users\n";
  for (const auto& row : rows) {
    out += row.metric + "," + std::to_string(row.r) + "," + format_double(row.mean) +
           "," + std::to_string(row.n_users) + "\n";
  }
  return out;
}

std::string MetricTable::to_json() const {
  std::string out = "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    out += "  {\"metric\": \"" + row.metric + "\", \"R\": " + std::to_string(row.r) +
           ", \"mean\": " + format_double(row.mean) +
           ", \"n_users\": " + std::to_string(row.n_users) + "}";
    if (i + 1 < rows.size()) out += ",";
    out += "\n";
  }
  out += "]\n";
  return out;
}

MetricTable evaluate_with_scorer(const BatchScorer& scorer, const HeldoutPair& heldout,
                                 const std::vector<std::size_t>& r_list,
                                 std::size_t batch_size) {
  heldout.validate();
  const std::size_t n = heldout.foldin.n_users();
  if (n == 0) throw DataError("evaluate: empty held-out set");
  if (r_list.empty()) throw UsageError("evaluate: empty r list");
  for (std::size_t r : r_list) {
    if (r == 0) throw UsageError("evaluate: r must be >= 1");
  }
  if (batch_size == 0) throw NumericError("evaluate: batch_size must be >= 1");

  std::vector<double> recall_sum(r_list.size(), 0.0), ndcg_sum(r_list.size(), 0.0);
  std::vector<std::size_t> user_ids(n);
  std::iota(user_ids.begin(), user_ids.end(), std::size_t{0});

  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, n);
    std::span<const std::size_t> chunk(user_ids.data() + begin, end - begin);
    DenseMatrix batch = dense_batch(heldout.foldin, chunk);
    DenseMatrix scores = scorer(batch);
    if (scores.rows() != chunk.size() || scores.cols() != heldout.foldin.n_items()) {
      throw NumericError("evaluate: scorer returned wrong shape");
    }

    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const std::size_t u = begin + i;
      double* row = scores.row_ptr(i);
      for (std::uint32_t item : heldout.foldin.row(u)) {
        row[item] = -std::numeric_limits<double>::infinity();
      }
      RankingResult rr;
      rr.ranked_items = rank_items({row, scores.cols()});
      rr.truth.assign(heldout.truth[u].begin(), heldout.truth[u].end());
      for (std::size_t k = 0; k < r_list.size(); ++k) {
        recall_sum[k] += recall_at(rr, r_list[k]);
        ndcg_sum[k] += ndcg_at(rr, r_list[k]);
      }
    }
  }

  MetricTable table;
  for (std::size_t k = 0; k < r_list.size(); ++k) {
    table.rows.push_back({"recall", r_list[k], recall_sum[k] / static_cast<double>(n), n});
  }
  for (std::size_t k = 0; k < r_list.size(); ++k) {
    table.rows.push_back({"ndcg", r_list[k], ndcg_sum[k] / static_cast<double>(n), n});
  }
  return table;
}

std::pair<std::string, std::size_t> parse_metric_at(const std::string& s) {
  const std::size_t at = s.find('@');
  if (at == std::string::npos) {
    throw UsageError("expected metric@R (such as ndcg@10), got '" + s + "'");
  }
  const std::string metric = s.substr(0, at);
  if (metric != "ndcg" && metric != "recall") {
    throw UsageError("unknown metric '" + metric + "', expected ndcg or recall");
  }
  char* end = nullptr;
  const std::string rs = s.substr(at + 1);
  const unsigned long r = std::strtoul(rs.c_str(), &end, 10);
  if (end == rs.c_str() || *end != '\0' || r == 0) {
    throw UsageError("bad rank in '" + s + "'");
  }
  return {metric, static_cast<std::size_t>(r)};
}

}  // namespace awae
