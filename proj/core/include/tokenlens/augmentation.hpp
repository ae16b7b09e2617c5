#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenlens/embedding.hpp"
#include "tokenlens/parallel.hpp"
#include "tokenlens/text.hpp"
#include "tokenlens/tokenizer.hpp"

namespace tokenlens {

struct AugmentationEntry {
  char32_t character = 0;
  std::string token;                  // UTF-8 of `character`
  std::vector<TokenId> constituents;  // original encoding, length >= 2
  Vector embedding;                   // derived input embedding
};

// New single-character tokens appended after the base vocabulary: entry i
// receives id base_vocab_size + i.
struct AugmentationPlan {
  DerivationStrategy strategy;
  std::size_t base_vocab_size = 0;
  std::size_t dim = 0;
  std::vector<AugmentationEntry> entries;
  std::map<std::string, std::string> metadata;
  // Corpus label -> fraction_new_tokens, filled in by callers that measure it.
  std::map<std::string, double> new_token_fraction;

  std::size_t size() const noexcept { return entries.size(); }
  TokenId new_token_id(std::size_t entry) const {
    return static_cast<TokenId>(base_vocab_size + entry);
  }
};

// Characters of `corpus` whose single-character encoding under `tok` takes
// two or more tokens.
std::set<char32_t> select_oov_chars(const Corpus& corpus, const TokenizerHandle& tok);

// Pooled hidden vector for a token sequence, used as the strategy query.
using PooledQuery = std::function<Vector(char32_t ch, std::span<const TokenId> constituents)>;

// Builds the plan for `chars` (ascending code point order) from a reference
// matrix and a pooled-query source. Throws InvalidArgument for a character
// that encodes to a single token.
AugmentationPlan augment_from_reference(const TokenizerHandle& tok, const EmbeddingMatrix& v0,
                                        const HiddenMatrix& vl, const std::set<char32_t>& chars,
                                        const DerivationStrategy& strategy, const PooledQuery& query,
                                        Parallelism par = {});

// Full pipeline against a runnable encoder: tokenize each character, pool its
// constituent embeddings at strategy.layer, and predict a single input vector
// with the strategy over V_0 and V_layer.
AugmentationPlan augment(const TokenizerHandle& tok, const EmbeddingMatrix& v0,
                         const LayerEncoder& enc, const std::set<char32_t>& chars,
                         const DerivationStrategy& strategy, Parallelism par = {});

// Base tokenizer with planned characters substituted by their new tokens.
// Text between planned characters is encoded by the base tokenizer.
class AugmentedTokenizer {
 public:
  AugmentedTokenizer(const TokenizerHandle& base, const AugmentationPlan& plan);

  std::vector<TokenId> encode(std::string_view text) const;
  bool is_new(TokenId id) const noexcept { return id >= plan_.base_vocab_size; }

  // Input embeddings for a mixed sequence of base and new tokens.
  Sequence embed(std::span<const TokenId> ids, const EmbeddingMatrix& v0) const;

 private:
  const TokenizerHandle& base_;
  const AugmentationPlan& plan_;
  std::map<char32_t, std::size_t> entry_of_;
};

// Cosine similarity of the mean `last_layer` hidden state of the sentence
// under the original and the augmented tokenization. Exactly 1 when the
// plan does not change the encoding. Throws on a zero pooled vector.
double eval_similarity(const LayerEncoder& enc, std::string_view sentence,
                       const TokenizerHandle& tok, const EmbeddingMatrix& v0,
                       const AugmentationPlan& plan, int last_layer);

struct SimilarityReport {
  std::vector<double> per_sentence;
  double mean = 0.0;
};

// Per-sentence similarities over every document, mean reduced in order.
SimilarityReport corpus_similarity(const LayerEncoder& enc, const Corpus& corpus,
                                   const TokenizerHandle& tok, const EmbeddingMatrix& v0,
                                   const AugmentationPlan& plan, int last_layer,
                                   Parallelism par = {});

// Share of emitted tokens that are plan tokens in the augmented encoding.
double fraction_new_tokens(const Corpus& corpus, const TokenizerHandle& tok,
                           const AugmentationPlan& plan);

}  // namespace tokenlens
