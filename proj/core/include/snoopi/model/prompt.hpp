// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace snoopi::model {

inline constexpr int kNullToken = 0;

/// Token sequence over a small vocabulary. Token 0 is the null
/// (unconditional) prompt. Tokens carry no position.
struct Prompt {
  std::vector<int> tokens;

  static Prompt null() { return Prompt{{kNullToken}}; }
  static Prompt of(std::initializer_list<int> tokens) { return Prompt{std::vector<int>(tokens)}; }

  bool is_null() const { return tokens.size() == 1 && tokens[0] == kNullToken; }
  std::size_t length() const { return tokens.size(); }
  /// Tokens sorted ascending; the multiset is all that the model sees.
  Prompt canonical() const;

  /// "3" or "1+2".
  std::string to_string() const;
  static Prompt parse(std::string_view text);

  auto operator<=>(const Prompt&) const = default;
  bool operator==(const Prompt&) const = default;
};

/// Throws ContractViolation unless 1 <= length <= max_length and every token is in [0, vocab).
void validate_prompt(const Prompt& prompt, int vocab, int max_length);

}  // namespace snoopi::model
