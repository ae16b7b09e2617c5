#include "tokenlens/tokenizer.hpp"

#include "tokenlens/error.hpp"

namespace tokenlens {

TokenizerHandle::TokenizerHandle(std::string name, EncodeFn encode, std::size_t vocab_size)
    : name_(std::move(name)), encode_(std::move(encode)), vocab_size_(vocab_size) {
  if (!encode_) throw InvalidArgument("tokenizer \"" + name_ + "\" has no encode function");
}

TokenizerHandle make_bpe_tokenizer(std::string name, std::shared_ptr<const BpeEncoder> encoder) {
  const std::size_t n = encoder->vocab().size();
  return TokenizerHandle(
      std::move(name), [enc = std::move(encoder)](std::string_view t) { return enc->encode(t); }, n);
}

TokenizerHandle make_unigram_tokenizer(std::string name, std::shared_ptr<const UnigramVocab> vocab) {
  const std::size_t n = vocab->size();
  return TokenizerHandle(
      std::move(name),
      [v = std::move(vocab)](std::string_view text) {
        std::vector<TokenId> ids;
        for (const auto& piece : ulm_viterbi_segment(text, *v))
          ids.push_back(static_cast<TokenId>(*v->find(piece)));
        return ids;
      },
      n);
}

}  // namespace tokenlens
