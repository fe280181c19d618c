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
#include "awae/data.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "awae/errors.hpp"
#include "awae/kv.hpp"
#include "awae/rng.hpp"

namespace awae {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// ClickMatrix

ClickMatrix ClickMatrix::from_rows(std::size_t n_items,
                                   std::vector<std::vector<std::uint32_t>> rows) {
  ClickMatrix m;
  m.n_items_ = n_items;
  m.row_offsets_.reserve(rows.size() + 1);
  for (auto& row : rows) {
    std::sort(row.begin(), row.end());
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] >= n_items) {
        throw DataError("item index " + std::to_string(row[i]) +
                        " out of range (n_items=" + std::to_string(n_items) + ")");
      }
      if (i > 0 && row[i] == row[i - 1]) {
        throw DataError("duplicate item " + std::to_string(row[i]) + " in row");
      }
    }
    m.items_.insert(m.items_.end(), row.begin(), row.end());
    m.row_offsets_.push_back(m.items_.size());
  }
  return m;
}

void ClickMatrix::add_provenance(const std::string& key, const std::string& value) {
  provenance_.emplace_back(key, value);
}

bool ClickMatrix::operator==(const ClickMatrix& o) const {
  return n_items_ == o.n_items_ && row_offsets_ == o.row_offsets_ &&
         items_ == o.items_ && provenance_ == o.provenance_;
}

void ClickMatrix::save(const std::string& dir) const {
  fs::create_directories(dir);
  KvFile meta;
  meta.set_u64("n_users", n_users());
  meta.set_u64("n_items", n_items_);
  for (const auto& p : provenance_) meta.set(p.first, p.second);
  meta.save(dir + "/meta");

  std::ofstream rows(dir + "/rows", std::ios::binary);
  if (!rows) throw DataError("cannot write " + dir + "/rows");
  for (std::size_t u = 0; u < n_users(); ++u) {
    auto r = row(u);
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) rows << ' ';
      rows << r[i];
    }
    rows << '\n';
  }
  if (!rows) throw DataError("write failed: " + dir + "/rows");
}

ClickMatrix ClickMatrix::load(const std::string& dir) {
  KvFile meta = KvFile::load(dir + "/meta");
  const std::uint64_t n_users = meta.get_u64("n_users");
  const std::uint64_t n_items = meta.get_u64("n_items");

  std::ifstream in(dir + "/rows", std::ios::binary);
  if (!in) throw DataError("cannot read " + dir + "/rows");
  std::vector<std::vector<std::uint32_t>> rows;
  rows.reserve(n_users);
  std::string line;
  for (std::uint64_t u = 0; u < n_users; ++u) {
    if (!std::getline(in, line)) {
      throw DataError(dir + "/rows: expected " + std::to_string(n_users) +
                      " rows, found " + std::to_string(u));
    }
    std::vector<std::uint32_t> row;
    const char* p = line.c_str();
    while (*p) {
      char* end = nullptr;
      unsigned long v = std::strtoul(p, &end, 10);
      if (end == p) {
        throw DataError(dir + "/rows:" + std::to_string(u + 1) + ": bad token");
      }
      row.push_back(static_cast<std::uint32_t>(v));
      p = end;
      while (*p == ' ') ++p;
    }
    rows.push_back(std::move(row));
  }
  if (std::getline(in, line) && !line.empty()) {
    throw DataError(dir + "/rows: trailing content after row " +
                    std::to_string(n_users));
  }

  ClickMatrix m = from_rows(n_items, std::move(rows));
  for (const auto& e : meta.entries()) {
    if (e.first != "n_users" && e.first != "n_items") {
      m.add_provenance(e.first, e.second);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// HeldoutPair

void HeldoutPair::validate() const {
  if (truth.size() != foldin.n_users()) {
    throw DataError("heldout pair: truth rows (" + std::to_string(truth.size()) +
                    ") != foldin users (" + std::to_string(foldin.n_users()) + ")");
  }
  for (std::size_t u = 0; u < truth.size(); ++u) {
    const auto& t = truth[u];
    if (t.empty()) {
      throw DataError("heldout pair: user " + std::to_string(u) + " has empty truth");
    }
    if (!std::is_sorted(t.begin(), t.end()) ||
        std::adjacent_find(t.begin(), t.end()) != t.end()) {
      throw DataError("heldout pair: truth row " + std::to_string(u) +
                      " is not sorted and unique");
    }
    auto f = foldin.row(u);
    for (std::uint32_t it : t) {
      if (it >= foldin.n_items()) {
        throw DataError("heldout pair: truth item out of range");
      }
      if (std::binary_search(f.begin(), f.end(), it)) {
        throw DataError("heldout pair: item " + std::to_string(it) +
                        " appears in both foldin and truth for user " +
                        std::to_string(u));
      }
    }
  }
}

void HeldoutPair::save(const std::string& dir) const {
  validate();
  fs::create_directories(dir);
  foldin.save(dir + "/foldin");
  std::ofstream out(dir + "/truth", std::ios::binary);
  if (!out) throw DataError("cannot write " + dir + "/truth");
  for (const auto& t : truth) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) out << ' ';
      out << t[i];
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + dir + "/truth");
}

HeldoutPair HeldoutPair::load(const std::string& dir) {
  HeldoutPair pair;
  pair.foldin = ClickMatrix::load(dir + "/foldin");
  std::ifstream in(dir + "/truth", std::ios::binary);
  if (!in) throw DataError("cannot read " + dir + "/truth");
  std::string line;
  for (std::size_t u = 0; u < pair.foldin.n_users(); ++u) {
    if (!std::getline(in, line)) {
      throw DataError(dir + "/truth: expected " +
                      std::to_string(pair.foldin.n_users()) + " rows");
    }
    std::vector<std::uint32_t> t;
    const char* p = line.c_str();
    while (*p) {
      char* end = nullptr;
      unsigned long v = std::strtoul(p, &end, 10);
      if (end == p) {
        throw DataError(dir + "/truth:" + std::to_string(u + 1) + ": bad token");
      }
      t.push_back(static_cast<std::uint32_t>(v));
      p = end;
      while (*p == ' ') ++p;
    }
    pair.truth.push_back(std::move(t));
  }
  pair.validate();
  return pair;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    std::size_t b = f.find_first_not_of(" \t\r");
    std::size_t e = f.find_last_not_of(" \t\r");
    f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace

std::vector<Interaction> read_interactions(std::istream& in,
                                           const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(source_name + ": empty input, expected a header line");
  }
  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  const std::vector<std::string> header = split_fields(line, delim);
  std::size_t user_col = header.size(), item_col = header.size(),
              value_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = lower(header[i]);
    if (h == "user" || h == "userid" || h == "user_id") user_col = i;
    else if (h == "item" || h == "itemid" || h == "item_id" || h == "movieid") item_col = i;
    else if (h == "value" || h == "rating" || h == "count") value_col = i;
  }
  if (user_col == header.size() || item_col == header.size()) {
    throw DataError(source_name + ":1: header must name user and item columns, got '" +
                    line + "'");
  }

  std::vector<Interaction> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_fields(line, delim);
    const std::size_t need =
        std::max(user_col, std::max(item_col, value_col == header.size() ? 0 : value_col));
    if (fields.size() <= need) {
      throw DataError(source_name + ":" + std::to_string(line_no) +
                      ": expected at least " + std::to_string(need + 1) + " fields");
    }
    Interaction rec;
    rec.user = fields[user_col];
    rec.item = fields[item_col];
    if (rec.user.empty() || rec.item.empty()) {
      throw DataError(source_name + ":" + std::to_string(line_no) +
                      ": empty user or item id");
    }
    if (value_col != header.size()) {
      const std::string& v = fields[value_col];
      char* end = nullptr;
      rec.value = std::strtod(v.c_str(), &end);
      if (end == v.c_str() || *end != '\0') {
        throw DataError(source_name + ":" + std::to_string(line_no) +
                        ": bad value '" + v + "'");
      }
      if (!(rec.value >= 0.0)) {
        throw DataError(source_name + ":" + std::to_string(line_no) +
                        ": negative value '" + v + "'");
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Ingest

namespace {

// Orders identifiers numerically when both are plain digit strings and
// lexicographically otherwise (digit strings sort first). Makes index
// assignment reproducible when a matrix's own row/column indices are fed back
// in as ids.
bool id_less(const std::string& a, const std::string& b) {
  auto all_digits = [](const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
      if (c < '0' || c > '9') return false;
    }
    return true;
  };
  const bool da = all_digits(a), db = all_digits(b);
  if (da != db) return da;
  if (da) {
    if (a.size() != b.size()) return a.size() < b.size();
  }
  return a < b;
}

}  // namespace

ClickMatrix ingest(const std::vector<Interaction>& records, double min_value,
                   std::size_t min_user_clicks, std::size_t min_item_audience) {
  // Intern ids, binarize, collapse duplicates.
  std::unordered_map<std::string, std::uint32_t> user_ids, item_ids;
  std::vector<std::string> user_names, item_names;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const auto& rec : records) {
    if (rec.value < min_value) continue;
    auto uit = user_ids.try_emplace(rec.user, user_names.size());
    if (uit.second) user_names.push_back(rec.user);
    auto iit = item_ids.try_emplace(rec.item, item_names.size());
    if (iit.second) item_names.push_back(rec.item);
    pairs.emplace_back(uit.first->second, iit.first->second);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  // Alternate the audience and click filters until both hold at once.
  std::vector<char> user_alive(user_names.size(), 1);
  std::vector<char> item_alive(item_names.size(), 1);
  for (;;) {
    bool changed = false;
    std::vector<std::size_t> audience(item_names.size(), 0);
    for (const auto& p : pairs) {
      if (user_alive[p.first] && item_alive[p.second]) ++audience[p.second];
    }
    for (std::size_t i = 0; i < item_names.size(); ++i) {
      if (item_alive[i] && audience[i] < min_item_audience) {
        item_alive[i] = 0;
        changed = true;
      }
    }
    std::vector<std::size_t> clicks(user_names.size(), 0);
    for (const auto& p : pairs) {
      if (user_alive[p.first] && item_alive[p.second]) ++clicks[p.first];
    }
    for (std::size_t u = 0; u < user_names.size(); ++u) {
      if (user_alive[u] && clicks[u] < min_user_clicks) {
        user_alive[u] = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }

  // Dense indices in identifier order.
  std::vector<std::uint32_t> live_users, live_items;
  for (std::uint32_t u = 0; u < user_names.size(); ++u) {
    if (user_alive[u]) live_users.push_back(u);
  }
  for (std::uint32_t i = 0; i < item_names.size(); ++i) {
    if (item_alive[i]) live_items.push_back(i);
  }
  if (live_users.empty() || live_items.empty()) {
    throw DataError("ingest: no interactions survive the filters");
  }
  std::sort(live_users.begin(), live_users.end(),
            [&](std::uint32_t a, std::uint32_t b) {
              return id_less(user_names[a], user_names[b]);
            });
  std::sort(live_items.begin(), live_items.end(),
            [&](std::uint32_t a, std::uint32_t b) {
              return id_less(item_names[a], item_names[b]);
            });
  std::vector<std::uint32_t> user_index(user_names.size()), item_index(item_names.size());
  for (std::uint32_t i = 0; i < live_users.size(); ++i) user_index[live_users[i]] = i;
  for (std::uint32_t i = 0; i < live_items.size(); ++i) item_index[live_items[i]] = i;

  std::vector<std::vector<std::uint32_t>> rows(live_users.size());
  for (const auto& p : pairs) {
    if (user_alive[p.first] && item_alive[p.second]) {
      rows[user_index[p.first]].push_back(item_index[p.second]);
    }
  }
  return ClickMatrix::from_rows(live_items.size(), std::move(rows));
}

// ---------------------------------------------------------------------------
// Split

namespace {

// Fold-in/truth partition of held-out users, consuming rng once per user in
// row order.
HeldoutPair make_heldout(const ClickMatrix& m, const std::vector<std::size_t>& users,
                         double foldin_fraction, std::mt19937_64& rng,
                         std::size_t* dropped) {
  std::vector<std::vector<std::uint32_t>> foldin_rows, truth_rows;
  for (std::size_t u : users) {
    auto r = m.row(u);
    if (r.size() < 2) {
      ++*dropped;
      continue;
    }
    std::vector<std::uint32_t> shuffled(r.begin(), r.end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const std::size_t n_fold =
        static_cast<std::size_t>(foldin_fraction * static_cast<double>(r.size()));
    std::vector<std::uint32_t> f(shuffled.begin(), shuffled.begin() + n_fold);
    std::vector<std::uint32_t> t(shuffled.begin() + n_fold, shuffled.end());
    std::sort(f.begin(), f.end());
    std::sort(t.begin(), t.end());
    foldin_rows.push_back(std::move(f));
    truth_rows.push_back(std::move(t));
  }
  HeldoutPair pair;
  pair.foldin = ClickMatrix::from_rows(m.n_items(), std::move(foldin_rows));
  pair.truth = std::move(truth_rows);
  pair.validate();
  return pair;
}

}  // namespace

SplitResult split(const ClickMatrix& m, const SplitSpec& spec) {
  const double sum = spec.train_fraction + spec.val_fraction + spec.test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw NumericError("split fractions must sum to 1, got " + format_double(sum));
  }
  if (!(spec.foldin_fraction > 0.0 && spec.foldin_fraction < 1.0)) {
    throw NumericError("foldin_fraction must lie in (0, 1)");
  }
  const std::size_t n = m.n_users();
  if (n == 0) throw DataError("split: empty matrix");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng = make_rng(spec.seed, /*stream=*/1);
  std::shuffle(order.begin(), order.end(), rng);

  std::size_t n_train = static_cast<std::size_t>(
      std::llround(spec.train_fraction * static_cast<double>(n)));
  std::size_t n_val = static_cast<std::size_t>(
      std::llround(spec.val_fraction * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  n_val = std::min(n_val, n - n_train);

  std::vector<std::size_t> train_users(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> val_users(order.begin() + n_train,
                                     order.begin() + n_train + n_val);
  std::vector<std::size_t> test_users(order.begin() + n_train + n_val, order.end());
  std::sort(train_users.begin(), train_users.end());
  std::sort(val_users.begin(), val_users.end());
  std::sort(test_users.begin(), test_users.end());

  SplitResult out;
  std::vector<std::vector<std::uint32_t>> train_rows;
  train_rows.reserve(train_users.size());
  for (std::size_t u : train_users) {
    auto r = m.row(u);
    train_rows.emplace_back(r.begin(), r.end());
  }
  out.train = ClickMatrix::from_rows(m.n_items(), std::move(train_rows));

  std::mt19937_64 fold_rng = make_rng(spec.seed, /*stream=*/2);
  out.val = make_heldout(m, val_users, spec.foldin_fraction, fold_rng,
                         &out.dropped_val_users);
  out.test = make_heldout(m, test_users, spec.foldin_fraction, fold_rng,
                          &out.dropped_test_users);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

ClickMatrix synthesize(std::size_t n_users, std::size_t n_items,
                       std::size_t n_clusters, std::size_t clicks_per_user,
                       std::uint64_t seed) {
  if (n_users == 0 || n_items == 0) throw NumericError("synthesize: empty shape");
  if (n_clusters == 0 || n_clusters > n_items) {
    throw NumericError("synthesize: n_clusters must lie in [1, n_items]");
  }
  if (clicks_per_user == 0 || clicks_per_user > n_items) {
    throw NumericError("synthesize: clicks_per_user must lie in [1, n_items]");
  }

  const std::size_t base = n_items / n_clusters;
  const std::size_t rem = n_items % n_clusters;
  auto block_start = [&](std::size_t c) { return c * base + std::min(c, rem); };
  auto block_size = [&](std::size_t c) { return base + (c < rem ? 1 : 0); };

  std::mt19937_64 rng = make_rng(seed, /*stream=*/3);
  std::vector<std::vector<std::uint32_t>> rows;
  rows.reserve(n_users);
  std::vector<std::uint32_t> inside, outside, picked;
  for (std::size_t u = 0; u < n_users; ++u) {
    const std::size_t c = u % n_clusters;
    const std::size_t start = block_start(c), size = block_size(c);

    // Each click lands in the user's own block with probability
    // 0.8 + 0.2 * (block / n_items); draw the in-block count, then uniform
    // distinct items on each side.
    const double p_in =
        0.8 + 0.2 * static_cast<double>(size) / static_cast<double>(n_items);
    std::binomial_distribution<std::size_t> in_count(clicks_per_user, p_in);
    std::size_t n_in = std::min(in_count(rng), size);
    std::size_t n_out = clicks_per_user - n_in;
    if (n_out > n_items - size) {
      n_out = n_items - size;
      n_in = clicks_per_user - n_out;
    }

    inside.clear();
    outside.clear();
    for (std::size_t i = 0; i < n_items; ++i) {
      if (i >= start && i < start + size) {
        inside.push_back(static_cast<std::uint32_t>(i));
      } else {
        outside.push_back(static_cast<std::uint32_t>(i));
      }
    }
    std::vector<std::uint32_t> row;
    picked.clear();
    std::sample(inside.begin(), inside.end(), std::back_inserter(picked), n_in, rng);
    row.insert(row.end(), picked.begin(), picked.end());
    picked.clear();
    std::sample(outside.begin(), outside.end(), std::back_inserter(picked), n_out, rng);
    row.insert(row.end(), picked.begin(), picked.end());
    rows.push_back(std::move(row));
  }

  ClickMatrix m = ClickMatrix::from_rows(n_items, std::move(rows));
  m.add_provenance("source", "synthesize");
  m.add_provenance("n_clusters", std::to_string(n_clusters));
  m.add_provenance("clicks_per_user", std::to_string(clicks_per_user));
  m.add_provenance("seed", std::to_string(seed));
  return m;
}

DenseMatrix dense_batch(const ClickMatrix& m, std::span<const std::size_t> users) {
  DenseMatrix batch(users.size(), m.n_items());
  for (std::size_t i = 0; i < users.size(); ++i) {
    double* row = batch.row_ptr(i);
    for (std::uint32_t item : m.row(users[i])) row[item] = 1.0;
  }
  return batch;
}

}  // namespace awae
