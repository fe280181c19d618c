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
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "awae/matrix.hpp"

namespace awae {

// One raw feedback record before binarization.
struct Interaction {
  std::string user;
  std::string item;
  double value = 1.0;
};

// Binary user-item click matrix, CSR layout. Rows are users, entries are the
// items that user clicked (sorted, unique). Item indices run over the full
// item universe [0, n_items), which may exceed the set of items that actually
// appear in rows.
class ClickMatrix {
 public:
  ClickMatrix() = default;

  // Rows are adopted as-is after sorting; duplicate items within a row or an
  // index >= n_items raise DataError.
  static ClickMatrix from_rows(std::size_t n_items,
                               std::vector<std::vector<std::uint32_t>> rows);

  std::size_t n_users() const { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
  std::size_t n_items() const { return n_items_; }
  std::uint64_t total_clicks() const { return items_.size(); }

  std::span<const std::uint32_t> row(std::size_t u) const {
    return {items_.data() + row_offsets_[u],
            items_.data() + row_offsets_[u + 1]};
  }
  std::size_t clicks(std::size_t u) const {
    return row_offsets_[u + 1] - row_offsets_[u];
  }

  // Free-form provenance recorded in the meta file (thresholds, seeds, ...).
  // Round-trips through save/load verbatim.
  void add_provenance(const std::string& key, const std::string& value);
  const std::vector<std::pair<std::string, std::string>>& provenance() const {
    return provenance_;
  }

  bool operator==(const ClickMatrix& o) const;

  // Directory layout: `meta` holds key=value lines (n_users, n_items, then
  // provenance), `rows` holds one line per user with space-separated item
  // indices. Round-trips bit-exactly.
  void save(const std::string& dir) const;
  static ClickMatrix load(const std::string& dir);

 private:
  std::size_t n_items_ = 0;
  std::vector<std::uint64_t> row_offsets_{0};
  std::vector<std::uint32_t> items_;
  std::vector<std::pair<std::string, std::string>> provenance_;
};

// Fold-in clicks plus the withheld ground truth for a set of held-out users.
// Row u of `foldin` and `truth[u]` are disjoint; their union is the user's
// full click row. truth[u] is non-empty and sorted.
struct HeldoutPair {
  ClickMatrix foldin;
  std::vector<std::vector<std::uint32_t>> truth;

  void validate() const;  // throws DataError on a broken pair
  void save(const std::string& dir) const;
  static HeldoutPair load(const std::string& dir);
};

struct SplitSpec {
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  double foldin_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct SplitResult {
  ClickMatrix train;
  HeldoutPair val;
  HeldoutPair test;
  // Held-out users with fewer than 2 clicks cannot be split and are dropped.
  std::size_t dropped_val_users = 0;
  std::size_t dropped_test_users = 0;
};

// Parses `user,item[,value]` records with a header line. Field order is taken
// from the header; the delimiter is a comma unless the header contains a tab.
// A missing value column means value = 1. Malformed records raise DataError
// naming the offending line.
std::vector<Interaction> read_interactions(std::istream& in,
                                           const std::string& source_name);

// Binarizes and filters a feedback log:
//   1. keep records with value >= min_value, collapse duplicate (user, item)
//      pairs to one click;
//   2. repeat until stable: drop items with fewer than min_item_audience
//      distinct users, then drop users with fewer than min_user_clicks items.
// Surviving users and items get dense indices ordered by identifier (numeric
// when both ids are plain digit strings, lexicographic otherwise), so feeding
// a matrix's own rows back through ingest reproduces it. Raises DataError when
// nothing survives.
ClickMatrix ingest(const std::vector<Interaction>& records, double min_value,
                   std::size_t min_user_clicks, std::size_t min_item_audience);

// Disjoint user partition (fractions must sum to 1 within 1e-9), then a
// per-user fold-in/truth split of the val and test rows: floor(foldin_fraction
// * clicks) clicks fold in, the rest become truth. Deterministic in spec.seed.
SplitResult split(const ClickMatrix& m, const SplitSpec& spec);

// Clustered synthetic feedback. Items are carved into n_clusters contiguous
// blocks; users round-robin over clusters; each user clicks clicks_per_user
// distinct items, each drawn 80% from the user's own block and 20% uniformly
// over all items.
ClickMatrix synthesize(std::size_t n_users, std::size_t n_items,
                       std::size_t n_clusters, std::size_t clicks_per_user,
                       std::uint64_t seed);

// Dense n x n_items batch of 0/1 rows for users[begin, end).
DenseMatrix dense_batch(const ClickMatrix& m,
                        std::span<const std::size_t> users);

}  // namespace awae
