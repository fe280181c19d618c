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
#include "awae/kv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "awae/errors.hpp"

namespace awae {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void KvFile::set(const std::string& key, const std::string& value) {
  for (auto& e : entries_) {
    if (e.first == key) {
      e.second = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void KvFile::set_u64(const std::string& key, std::uint64_t value) {
  set(key, std::to_string(value));
}

void KvFile::set_i64(const std::string& key, std::int64_t value) {
  set(key, std::to_string(value));
}

void KvFile::set_double(const std::string& key, double value) {
  set(key, format_double(value));
}

void KvFile::set_bool(const std::string& key, bool value) {
  set(key, value ? "true" : "false");
}

bool KvFile::has(const std::string& key) const {
  for (const auto& e : entries_) {
    if (e.first == key) return true;
  }
  return false;
}

const std::string& KvFile::get(const std::string& key) const {
  for (const auto& e : entries_) {
    if (e.first == key) return e.second;
  }
  throw DataError("missing key '" + key + "'");
}

std::uint64_t KvFile::get_u64(const std::string& key) const {
  const std::string& s = get(key);
  char* end = nullptr;
  std::uint64_t v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw DataError("key '" + key + "' is not an unsigned integer: " + s);
  }
  return v;
}

std::int64_t KvFile::get_i64(const std::string& key) const {
  const std::string& s = get(key);
  char* end = nullptr;
  std::int64_t v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw DataError("key '" + key + "' is not an integer: " + s);
  }
  return v;
}

double KvFile::get_double(const std::string& key) const {
  const std::string& s = get(key);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw DataError("key '" + key + "' is not a number: " + s);
  }
  return v;
}

bool KvFile::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw DataError("key '" + key + "' is not a boolean: " + s);
}

std::string KvFile::serialize() const {
  std::string out;
  for (const auto& e : entries_) {
    out += e.first;
    out += '=';
    out += e.second;
    out += '\n';
  }
  return out;
}

KvFile KvFile::parse(const std::string& text, const std::string& source_name) {
  KvFile kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    if (line[b] == '#') continue;
    std::size_t eq = line.find('=', b);
    if (eq == std::string::npos) {
      throw DataError(source_name + ":" + std::to_string(line_no) +
                      ": expected key=value, got '" + line + "'");
    }
    std::string key = line.substr(b, eq - b);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::string value = line.substr(eq + 1);
    if (key.empty()) {
      throw DataError(source_name + ":" + std::to_string(line_no) + ": empty key");
    }
    if (kv.has(key)) {
      throw DataError(source_name + ":" + std::to_string(line_no) +
                      ": duplicate key '" + key + "'");
    }
    kv.set(key, value);
  }
  return kv;
}

void KvFile::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << serialize();
  if (!out) throw DataError("write failed: " + path);
}

KvFile KvFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

}  // namespace awae
