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

#ifndef QRC_CONFIG_H_
#define QRC_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace qrc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` settings. Blank lines and lines starting with '#' are
// ignored; keys may not repeat.
class Config {
 public:
  static Config Parse(const std::string& text,
                      const std::string& source = "<config>");
  static Config Load(const std::filesystem::path& path);

  bool Has(const std::string& key) const { return entries_.count(key) > 0; }
  std::string GetString(const std::string& key,
                        const std::string& fallback) const;
  double GetReal(const std::string& key, double fallback) const;
  int64_t GetInt(const std::string& key, int64_t fallback) const;
  uint64_t GetUnsigned(const std::string& key, uint64_t fallback) const;
  void Set(const std::string& key, const std::string& value);

  // Throws ConfigError naming the first key outside `known`.
  void RequireKnown(const std::set<std::string>& known) const;

  // Canonical text: sorted `key = value` lines.
  std::string ToText() const;
  // FNV-1a of the canonical text, as 16 hex digits.
  std::string HashHex() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::string source_ = "<config>";
  std::map<std::string, std::string> entries_;
};

// Name of the environment variable that overrides the configured seed.
inline constexpr const char* kSeedEnvironmentVariable = "QRCODEC_SEED";

// Replaces `seed` with QRCODEC_SEED when that variable is set.
void ApplySeedOverride(Config& config);

}  // namespace qrc

#endif  // QRC_CONFIG_H_
