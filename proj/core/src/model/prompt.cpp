// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/model/prompt.hpp"

#include <algorithm>
#include <charconv>

#include "snoopi/error.hpp"

namespace snoopi::model {

Prompt Prompt::canonical() const {
  Prompt out = *this;
  std::sort(out.tokens.begin(), out.tokens.end());
  return out;
}

std::string Prompt::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += '+';
    out += std::to_string(tokens[i]);
  }
  return out;
}

Prompt Prompt::parse(std::string_view text) {
  Prompt out;
  while (!text.empty()) {
    const auto plus = text.find('+');
    const std::string_view piece = text.substr(0, plus);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), value);
    if (ec != std::errc() || ptr != piece.data() + piece.size())
      throw ConfigError("bad prompt token '" + std::string(piece) + "'");
    out.tokens.push_back(value);
    if (plus == std::string_view::npos) break;
    text.remove_prefix(plus + 1);
  }
  if (out.tokens.empty()) throw ConfigError("empty prompt");
  return out;
}

void validate_prompt(const Prompt& prompt, int vocab, int max_length) {
  SNOOPI_REQUIRE(!prompt.tokens.empty(), "prompt must have at least one token");
  SNOOPI_REQUIRE(static_cast<int>(prompt.tokens.size()) <= max_length,
                 "prompt longer than " + std::to_string(max_length) + " tokens");
  for (int token : prompt.tokens)
    SNOOPI_REQUIRE(token >= 0 && token < vocab,
                   "token " + std::to_string(token) + " outside vocabulary [0, " + std::to_string(vocab) + ")");
}

}  // namespace snoopi::model
