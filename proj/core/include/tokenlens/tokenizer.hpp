#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tokenlens/merge_training.hpp"
#include "tokenlens/unigram.hpp"
#include "tokenlens/vocabulary.hpp"

namespace tokenlens {

// A named, deterministic text -> token-id function. None of the encoders
// built here emit special or control tokens.
class TokenizerHandle {
 public:
  using EncodeFn = std::function<std::vector<TokenId>(std::string_view)>;

  TokenizerHandle(std::string name, EncodeFn encode, std::size_t vocab_size);

  const std::string& name() const noexcept { return name_; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }
  std::vector<TokenId> encode(std::string_view text) const { return encode_(text); }

 private:
  std::string name_;
  EncodeFn encode_;
  std::size_t vocab_size_;
};

TokenizerHandle make_bpe_tokenizer(std::string name, std::shared_ptr<const BpeEncoder> encoder);

// Ids are indices into the unigram vocabulary.
TokenizerHandle make_unigram_tokenizer(std::string name, std::shared_ptr<const UnigramVocab> vocab);

}  // namespace tokenlens
