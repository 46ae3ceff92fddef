// Copyright 2026 The QR Codec Authors.
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

#include "qrc/config.h"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "qrc/io.h"

namespace qrc {
namespace {

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

Config Config::Parse(const std::string& text, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const auto eq = trimmed.find('=');
    const std::string where = source + ":" + std::to_string(number);
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected key = value");
    }
    const std::string key = Trim(trimmed.substr(0, eq));
    const std::string value = Trim(trimmed.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!cfg.entries_.emplace(key, value).second) {
      throw ConfigError(where + ": duplicate key '" + key + "'");
    }
  }
  return cfg;
}

Config Config::Load(const std::filesystem::path& path) {
  return Parse(ReadFileText(path), path.string());
}

std::string Config::GetString(const std::string& key,
                              const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Config::GetReal(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != it->second.size()) {
    throw ConfigError(source_ + ": '" + key + "' is not a number: " +
                      it->second);
  }
  return v;
}

int64_t Config::GetInt(const std::string& key, int64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  size_t used = 0;
  int64_t v = 0;
  try {
    v = std::stoll(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != it->second.size()) {
    throw ConfigError(source_ + ": '" + key + "' is not an integer: " +
                      it->second);
  }
  return v;
}

uint64_t Config::GetUnsigned(const std::string& key, uint64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  size_t used = 0;
  uint64_t v = 0;
  try {
    if (!it->second.empty() && it->second[0] != '-') {
      v = std::stoull(it->second, &used, 0);
    }
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != it->second.size()) {
    throw ConfigError(source_ + ": '" + key +
                      "' is not an unsigned integer: " + it->second);
  }
  return v;
}

void Config::Set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

void Config::RequireKnown(const std::set<std::string>& known) const {
  for (const auto& [key, value] : entries_) {
    if (known.count(key) == 0) {
      throw ConfigError(source_ + ": unknown key '" + key + "'");
    }
  }
}

std::string Config::ToText() const {
  std::string out;
  for (const auto& [key, value] : entries_) out += key + " = " + value + "\n";
  return out;
}

std::string Config::HashHex() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : ToText()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ApplySeedOverride(Config& config) {
  const char* env = std::getenv(kSeedEnvironmentVariable);
  if (env == nullptr || *env == '\0') return;
  Config probe = Config::Parse(std::string("seed = ") + env, kSeedEnvironmentVariable);
  probe.GetUnsigned("seed", 0);
  config.Set("seed", probe.GetString("seed", ""));
}

}  // namespace qrc
