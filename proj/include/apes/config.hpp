/*
 * Copyright 2026 The APES Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef APES_CONFIG_HPP_
#define APES_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "apes/error.hpp"

namespace apes {

// Line-oriented `key = value` configuration with `[section]` headers and
// `#` comments. Later assignments override earlier ones, which is how
// command-line overrides are layered on top of a file.
class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig parse_string(std::string_view text,
                                const std::string& origin = "<string>") {
    RunConfig config;
    std::string section;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t end = text.find('\n', start);
      std::string_view line = text.substr(
          start, end == std::string_view::npos ? text.size() - start
                                               : end - start);
      ++line_no;
      start = end == std::string_view::npos ? text.size() + 1 : end + 1;

      const std::size_t hash = line.find('#');
      if (hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;

      if (line.front() == '[') {
        if (line.back() != ']')
          throw config_error(origin + ":" + std::to_string(line_no) +
                             ": unterminated section header");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        if (section.empty())
          throw config_error(origin + ":" + std::to_string(line_no) +
                             ": empty section name");
        continue;
      }

      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos)
        throw config_error(origin + ":" + std::to_string(line_no) +
                           ": expected `key = value`");
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (key.empty())
        throw config_error(origin + ":" + std::to_string(line_no) +
                           ": empty key");
      config.values_[section][key] = value;
    }
    return config;
  }

  static RunConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path);
  }

  void set(const std::string& section, const std::string& key,
           const std::string& value) {
    values_[section][key] = value;
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto sec = values_.find(section);
    return sec != values_.end() && sec->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    const auto sec = values_.find(section);
    if (sec == values_.end()) return fallback;
    const auto it = sec->second.find(key);
    return it == sec->second.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& section,
                             const std::string& key) const {
    if (!has(section, key))
      throw config_error("missing config key [" + section + "] " + key);
    return values_.at(section).at(key);
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    if (!has(section, key)) return fallback;
    return parse_double(section, key, values_.at(section).at(key));
  }

  int get_int(const std::string& section, const std::string& key,
              int fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& raw = values_.at(section).at(key);
    try {
      std::size_t used = 0;
      const long value = std::stol(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return static_cast<int>(value);
    } catch (const std::exception&) {
      throw config_error("config key [" + section + "] " + key +
                         " is not an integer: " + raw);
    }
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& raw = values_.at(section).at(key);
    try {
      std::size_t used = 0;
      const unsigned long long value = std::stoull(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return static_cast<std::uint64_t>(value);
    } catch (const std::exception&) {
      throw config_error("config key [" + section + "] " + key +
                         " is not an unsigned integer: " + raw);
    }
  }

  // Comma-separated list value.
  std::vector<std::string> get_list(const std::string& section,
                                    const std::string& key,
                                    const std::string& fallback) const {
    const std::string raw = get_string(section, key, fallback);
    std::vector<std::string> items;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
      const std::size_t comma = raw.find(',', pos);
      const std::string_view item =
          std::string_view(raw).substr(pos, comma == std::string::npos
                                                ? raw.size() - pos
                                                : comma - pos);
      const std::string_view trimmed = trim(item);
      if (!trimmed.empty()) items.emplace_back(trimmed);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return items;
  }

  // Flat (section, key, value) view in deterministic order, used to echo
  // the resolved configuration into every output file.
  std::vector<std::string> flatten() const {
    std::vector<std::string> lines;
    for (const auto& [section, entries] : values_)
      for (const auto& [key, value] : entries)
        lines.push_back((section.empty() ? key : section + "." + key) + " = " +
                        value);
    return lines;
  }

  // Rejects keys outside the given allowlist; catches config typos early.
  void require_known(
      const std::map<std::string, std::vector<std::string>>& allowed) const {
    for (const auto& [section, entries] : values_) {
      const auto sec = allowed.find(section);
      if (sec == allowed.end())
        throw config_error("unknown config section [" + section + "]");
      for (const auto& [key, value] : entries) {
        (void)value;
        bool known = false;
        for (const auto& candidate : sec->second)
          if (candidate == key) known = true;
        if (!known)
          throw config_error("unknown config key [" + section + "] " + key);
      }
    }
  }

 private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                          s.front() == '\r'))
      s.remove_prefix(1);
    while (!s.empty() &&
           (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
      s.remove_suffix(1);
    return s;
  }

  double parse_double(const std::string& section, const std::string& key,
                      const std::string& raw) const {
    try {
      std::size_t used = 0;
      const double value = std::stod(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return value;
    } catch (const std::exception&) {
      throw config_error("config key [" + section + "] " + key +
                         " is not a number: " + raw);
    }
  }

  std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace apes

#endif  // APES_CONFIG_HPP_
