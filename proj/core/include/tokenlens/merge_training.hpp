#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "tokenlens/parallel.hpp"
#include "tokenlens/text.hpp"
#include "tokenlens/vocabulary.hpp"

namespace tokenlens {

using PairCounts = std::map<std::pair<TokenId, TokenId>, std::uint64_t>;

// Corpus-global adjacent pair counts. A pair of equal tokens is counted
// without overlap, so a run of r copies of t yields floor(r/2) for (t,t);
// pairs of distinct tokens cannot overlap themselves and are all counted.
// Pairs never span documents.
PairCounts count_adjacent_pairs(std::span<const std::vector<TokenId>> documents,
                                Parallelism par = {});

struct TargetVocabSize {
  std::size_t size;
};
struct MinPairFrequency {
  std::uint64_t frequency;
};
struct MaxMerges {
  std::size_t merges;
};

// Training stops at whichever rule is given, or earlier when no adjacent
// pair remains.
using StopRule = std::variant<TargetVocabSize, MinPairFrequency, MaxMerges>;

struct TrainResult {
  MergeModel model;
  // Final segmentation of every training document.
  std::vector<std::vector<TokenId>> segmentation;
};

// Byte-pair encoding. The vocabulary starts as the distinct characters of the
// corpus in byte order; each step merges the most frequent adjacent pair.
// Ties go to the lexicographically smallest concatenation, then the smallest
// left token.
TrainResult bpe_train(const Corpus& corpus, StopRule stop, Parallelism par = {});

// WordPiece-style training: same loop as bpe_train but each step merges the
// pair maximizing wordpiece_merge_score.
TrainResult wordpiece_train(const Corpus& corpus, StopRule stop, Parallelism par = {});

// Gain proxy for merging a and b into ab under a unigram model:
//   ab*log(ab / (a*b)) - (C - ab)*log(C - ab)
// with natural logs and 0*log(0) = 0.
double wordpiece_merge_score(std::uint64_t count_a, std::uint64_t count_b, std::uint64_t count_ab,
                             std::uint64_t corpus_len);

// Replaces every non-overlapping (left, right) occurrence, scanning left to
// right.
std::vector<TokenId> apply_merge(std::span<const TokenId> tokens, TokenId left, TokenId right,
                                 TokenId result);

// Rank-ordered merge encoder. Text starts as one token per character; the
// lowest-ranked applicable rule is applied exhaustively, repeatedly, until
// no rule applies.
class BpeEncoder {
 public:
  // With `byte_level`, raw bytes are first mapped through byte_level_encode.
  BpeEncoder(Vocabulary vocab, MergeRuleList merges, bool byte_level = false);

  // Throws OutOfVocabulary when a character has no token.
  std::vector<TokenId> encode(std::string_view text) const;

  const Vocabulary& vocab() const noexcept { return vocab_; }
  const MergeRuleList& merges() const noexcept { return merges_; }
  bool byte_level() const noexcept { return byte_level_; }

 private:
  struct RankedMerge {
    std::size_t rank;
    TokenId result;
  };

  Vocabulary vocab_;
  MergeRuleList merges_;
  bool byte_level_;
  std::unordered_map<std::uint64_t, RankedMerge> ranks_;
};

std::vector<TokenId> bpe_encode(std::string_view text, const Vocabulary& vocab,
                                const MergeRuleList& merges);

}  // namespace tokenlens
