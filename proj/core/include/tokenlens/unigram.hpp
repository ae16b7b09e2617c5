#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tokenlens/parallel.hpp"
#include "tokenlens/text.hpp"

namespace tokenlens {

// sum_x count(x)*log(count(x)) - N*log(N), N = sum of counts. This is the
// corpus log-likelihood under the relative-frequency unigram model. Terms are
// summed in ascending count order so equal multisets give equal results.
// Throws InvalidArgument for empty input or zero counts.
double unigram_log_likelihood(std::span<const std::uint64_t> counts);
double unigram_log_likelihood(const std::map<std::string, std::uint64_t>& token_counts);

// Unigram token inventory with log-probabilities summing to one.
class UnigramVocab {
 public:
  UnigramVocab() = default;

  // Throws InvalidArgument on duplicates, empty tokens, non-finite scores, or
  // probabilities not summing to 1 within 1e-9.
  explicit UnigramVocab(std::vector<std::pair<std::string, double>> pieces);

  // Relative frequencies over `counts`. Tokens with zero count receive a
  // floor probability of e^-10 times the smallest observed probability, and
  // the result is renormalized.
  static UnigramVocab from_counts(const std::vector<std::pair<std::string, std::uint64_t>>& counts);

  std::size_t size() const noexcept { return pieces_.size(); }
  const std::string& token(std::size_t i) const { return pieces_.at(i).first; }
  double log_prob(std::size_t i) const { return pieces_.at(i).second; }
  const std::vector<std::pair<std::string, double>>& pieces() const noexcept { return pieces_; }
  std::optional<std::size_t> find(std::string_view token) const;

  // Single-character tokens are never pruned.
  bool is_single_char(std::size_t i) const;
  std::size_t single_char_count() const;
  std::size_t max_piece_chars() const noexcept { return max_piece_chars_; }

  // Copy without `token`, the remaining probabilities renormalized by
  // subtracting log(1 - p(token)).
  UnigramVocab without(std::string_view token) const;

 private:
  std::vector<std::pair<std::string, double>> pieces_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t max_piece_chars_ = 0;
};

// Maximum-likelihood segmentation by dynamic programming. Ties prefer fewer
// tokens, then the lexicographically smallest token sequence. Throws
// OutOfVocabulary when some character cannot be covered.
std::vector<std::string> ulm_viterbi_segment(std::string_view text, const UnigramVocab& vocab);

// Token counts of the Viterbi segmentation of every document.
std::map<std::string, std::uint64_t> ulm_segment_counts(const Corpus& corpus,
                                                        const UnigramVocab& vocab);

// Top-down pruning. Each step tries removing every multi-character token,
// re-segments the corpus, and keeps the removal with the highest resulting
// log-likelihood (ties: smallest token). Probabilities are then re-estimated
// from that segmentation. Throws InvalidArgument when `target_size` is below
// the number of single-character tokens.
UnigramVocab ulm_prune(const UnigramVocab& seed, const Corpus& corpus, std::size_t target_size,
                       Parallelism par = {});

// Seed inventory: every character plus the most valuable substrings of up to
// `max_piece_chars` characters occurring at least twice, ranked by
// frequency * length. Probabilities come from one Viterbi re-estimation.
UnigramVocab ulm_seed(const Corpus& corpus, std::size_t seed_size, std::size_t max_piece_chars);

}  // namespace tokenlens
