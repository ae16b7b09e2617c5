#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tokenlens/byte_level.hpp"
#include "tokenlens/tokenizer.hpp"

namespace tokenlens::testing {

// Byte-level tokenizer with one token per byte and no merges: token id == byte.
inline TokenizerHandle byte_tokenizer() {
  std::vector<std::string> tokens;
  for (int b = 0; b < 256; ++b) tokens.push_back(byte_level_encode(std::string(1, static_cast<char>(b))));
  return make_bpe_tokenizer("bytes", std::make_shared<const BpeEncoder>(Vocabulary(tokens), MergeRuleList{}, true));
}

// Character-level tokenizer over exactly `chars` (UTF-8 strings, in id order).
inline TokenizerHandle char_tokenizer(std::vector<std::string> chars) {
  return make_bpe_tokenizer("chars", std::make_shared<const BpeEncoder>(Vocabulary(std::move(chars)), MergeRuleList{}));
}

// Random string of `len` characters drawn from `alphabet`.
inline std::string random_string(std::mt19937_64& rng, const std::vector<std::string>& alphabet,
                                 std::size_t len) {
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += alphabet[pick(rng)];
  return s;
}

}  // namespace tokenlens::testing
