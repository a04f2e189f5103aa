// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace snoopi::io {

enum class ValueKind { integer, real, text, boolean };

struct KeySpec {
  std::string key;
  ValueKind kind;
  std::string default_value;
  std::string help;
};

/// Every recognised key, sorted.
const std::vector<KeySpec>& config_keys();

/// Flat `key = value` run configuration. Lines starting with `#` are
/// comments. Unknown keys and ill-typed values raise ConfigError.
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::string& path);

  void set(std::string_view key, std::string_view value);
  bool is_default(std::string_view key) const;

  const std::string& text(std::string_view key) const;
  std::int64_t integer(std::string_view key) const;
  double real(std::string_view key) const;
  bool boolean(std::string_view key) const;

  /// Canonical form: every key in sorted order with normalised values.
  std::string serialize() const;
  /// FNV-1a of the canonical form.
  std::uint64_t hash() const;

  /// Defaults annotated with their descriptions.
  static std::string defaults_text();

 private:
  const KeySpec& spec(std::string_view key) const;
  std::map<std::string, std::string, std::less<>> values_;
};

/// Splits on `sep`, trimming whitespace and dropping empty items.
std::vector<std::string> split_list(std::string_view text, char sep);
std::vector<double> parse_real_list(std::string_view text);

}  // namespace snoopi::io
