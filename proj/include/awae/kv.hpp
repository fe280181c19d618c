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
#include <string>
#include <utility>
#include <vector>

namespace awae {

// Ordered key=value records. One `key=value` pair per line; `#` starts a
// comment line; blank lines are ignored. Order is preserved so writes are
// reproducible byte for byte.
class KvFile {
 public:
  void set(const std::string& key, const std::string& value);
  void set_u64(const std::string& key, std::uint64_t value);
  void set_i64(const std::string& key, std::int64_t value);
  void set_double(const std::string& key, double value);
  void set_bool(const std::string& key, bool value);

  bool has(const std::string& key) const;
  // Lookups throw DataError when the key is missing or malformed.
  const std::string& get(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::int64_t get_i64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string serialize() const;
  static KvFile parse(const std::string& text, const std::string& source_name);

  void save(const std::string& path) const;
  static KvFile load(const std::string& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// %.17g rendering: round-trips doubles exactly and is stable across runs.
std::string format_double(double v);

}  // namespace awae
