#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tokenlens/parallel.hpp"
#include "tokenlens/vocabulary.hpp"

namespace tokenlens {

// Token rewriting applied before vocabularies are compared. Continuation
// markers are stripped repeatedly from the start of a token; each prefix
// marker is then replaced everywhere it occurs. Rules are validated so that
// normalization is idempotent.
struct NormalizationRules {
  std::vector<std::pair<std::string, std::string>> prefix_markers;
  std::vector<std::string> strip_continuation;

  // "Ġ" and "▁" become a space, a leading "##" is removed.
  static NormalizationRules defaults();
  static NormalizationRules none() { return {}; }

  // Throws InvalidArgument if a replacement reintroduces a marker.
  void validate() const;
};

std::string normalize_token(std::string_view token, const NormalizationRules& rules);

struct NormalizedVocab {
  Vocabulary vocab;
  std::size_t collapsed = 0;      // tokens merged into an earlier duplicate
  std::size_t dropped_empty = 0;  // tokens that normalized to ""
};

// Set semantics: first occurrence wins, order otherwise preserved.
NormalizedVocab normalize_vocab(const Vocabulary& raw, const NormalizationRules& rules);

// |a ∩ b| / |a ∪ b| under exact byte equality. Throws when both are empty.
double jaccard(const Vocabulary& a, const Vocabulary& b);

// |small ∩ large| / |small|. Throws when `small` is empty.
double containment(const Vocabulary& small, const Vocabulary& large);

// One row of the cleaned-vocabulary breakdown table.
struct VocabBreakdownRow {
  std::size_t clean_vocab_size = 0;
  std::size_t distinct_blocks = 0;
  std::array<std::size_t, 4> chars_by_byte_len{};   // 1..4 byte characters
  std::array<std::size_t, 8> tokens_by_byte_len{};  // 1..7 byte tokens, then >7
};

// Tokens that are not valid UTF-8 contribute the characters found by
// recover_utf8_chars.
VocabBreakdownRow vocab_breakdown(const Vocabulary& vocab);

enum class Metric { jaccard, containment };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);

struct NamedVocab {
  std::string name;
  Vocabulary vocab;
};

struct ComparisonMatrix {
  Metric metric = Metric::jaccard;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;
};

// Pairwise metric in input order. For containment, each off-diagonal cell
// measures the smaller vocabulary against the larger. Needs at least two
// non-empty vocabularies.
ComparisonMatrix comparison_matrix(std::span<const NamedVocab> vocabs, Metric metric,
                                   Parallelism par = {});

// Header row and column of labels, values with full round-trip precision.
std::string comparison_csv(const ComparisonMatrix& m);

struct NamedBreakdown {
  std::string name;
  VocabBreakdownRow row;
};

// Columns: tokenizer, clean vocab size, distinct blocks, 1-4 byte chars,
// 1-7 byte tokens, >7 byte tokens.
std::string breakdown_tsv(std::span<const NamedBreakdown> rows);

}  // namespace tokenlens
