#include "tokenlens/unigram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tokenlens/error.hpp"

namespace tokenlens {

namespace {

constexpr double kSumTolerance = 1e-9;
constexpr double kFloorLogGap = 10.0;

std::size_t char_length(std::string_view s) { return split_utf8_chars(s).size(); }

struct Cell {
  double score = -std::numeric_limits<double>::infinity();
  std::size_t n_tokens = 0;
  std::vector<std::size_t> pieces;  // indices into the vocab
  bool reachable = false;
};

bool lex_less(const UnigramVocab& v, const std::vector<std::size_t>& a,
              const std::vector<std::size_t>& b) {
  return std::lexicographical_compare(
      a.begin(), a.end(), b.begin(), b.end(),
      [&](std::size_t x, std::size_t y) { return v.token(x) < v.token(y); });
}

}  // namespace

double unigram_log_likelihood(std::span<const std::uint64_t> counts) {
  if (counts.empty()) throw InvalidArgument("unigram log-likelihood of an empty corpus");
  std::vector<std::uint64_t> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == 0) throw InvalidArgument("token counts must be at least 1");
  double sum = 0.0;
  std::uint64_t total = 0;
  for (std::uint64_t c : sorted) {
    const double x = static_cast<double>(c);
    sum += x * std::log(x);
    total += c;
  }
  const double n = static_cast<double>(total);
  return sum - n * std::log(n);
}

double unigram_log_likelihood(const std::map<std::string, std::uint64_t>& token_counts) {
  std::vector<std::uint64_t> counts;
  counts.reserve(token_counts.size());
  for (const auto& [token, c] : token_counts) counts.push_back(c);
  return unigram_log_likelihood(counts);
}

UnigramVocab::UnigramVocab(std::vector<std::pair<std::string, double>> pieces)
    : pieces_(std::move(pieces)) {
  double total = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& [token, lp] = pieces_[i];
    if (token.empty()) throw InvalidArgument("unigram vocabulary contains an empty token");
    if (!std::isfinite(lp)) throw InvalidArgument("non-finite log-probability for \"" + token + "\"");
    if (!index_.emplace(token, i).second)
      throw InvalidArgument("duplicate token in unigram vocabulary: \"" + token + "\"");
    max_piece_chars_ = std::max(max_piece_chars_, char_length(token));
    total += std::exp(lp);
  }
  if (!pieces_.empty() && std::abs(total - 1.0) > kSumTolerance)
    throw InvalidArgument("unigram probabilities sum to " + std::to_string(total) + ", not 1");
}

UnigramVocab UnigramVocab::from_counts(
    const std::vector<std::pair<std::string, std::uint64_t>>& counts) {
  std::uint64_t total = 0;
  std::uint64_t min_count = std::numeric_limits<std::uint64_t>::max();
  for (const auto& [token, c] : counts) {
    total += c;
    if (c > 0) min_count = std::min(min_count, c);
  }
  if (total == 0) throw InvalidArgument("cannot estimate unigram probabilities from zero counts");
  const double floor_weight = static_cast<double>(min_count) * std::exp(-kFloorLogGap);
  double mass = 0.0;
  for (const auto& [token, c] : counts) mass += c > 0 ? static_cast<double>(c) : floor_weight;
  std::vector<std::pair<std::string, double>> pieces;
  pieces.reserve(counts.size());
  for (const auto& [token, c] : counts) {
    const double w = c > 0 ? static_cast<double>(c) : floor_weight;
    pieces.emplace_back(token, std::log(w) - std::log(mass));
  }
  return UnigramVocab(std::move(pieces));
}

std::optional<std::size_t> UnigramVocab::find(std::string_view token) const {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  return std::nullopt;
}

bool UnigramVocab::is_single_char(std::size_t i) const { return char_length(token(i)) == 1; }

std::size_t UnigramVocab::single_char_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += is_single_char(i);
  return n;
}

UnigramVocab UnigramVocab::without(std::string_view token) const {
  const auto removed = find(token);
  if (!removed) throw InvalidArgument("token not in unigram vocabulary: \"" + std::string(token) + "\"");
  const double shift = std::log1p(-std::exp(log_prob(*removed)));
  std::vector<std::pair<std::string, double>> kept;
  kept.reserve(size() - 1);
  for (std::size_t i = 0; i < size(); ++i)
    if (i != *removed) kept.emplace_back(pieces_[i].first, pieces_[i].second - shift);
  return UnigramVocab(std::move(kept));
}

std::vector<std::string> ulm_viterbi_segment(std::string_view text, const UnigramVocab& vocab) {
  const std::vector<std::string> chars = split_utf8_chars(text);
  const std::size_t n = chars.size();
  std::vector<std::size_t> byte_at(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) byte_at[i + 1] = byte_at[i] + chars[i].size();

  std::vector<Cell> best(n + 1);
  best[0].score = 0.0;
  best[0].reachable = true;
  for (std::size_t end = 1; end <= n; ++end) {
    Cell& cell = best[end];
    const std::size_t lo = end > vocab.max_piece_chars() ? end - vocab.max_piece_chars() : 0;
    for (std::size_t start = lo; start < end; ++start) {
      const Cell& prev = best[start];
      if (!prev.reachable) continue;
      const auto piece = vocab.find(text.substr(byte_at[start], byte_at[end] - byte_at[start]));
      if (!piece) continue;
      const double score = prev.score + vocab.log_prob(*piece);
      const std::size_t count = prev.n_tokens + 1;
      bool take = !cell.reachable || score > cell.score;
      if (!take && score == cell.score) {
        if (count != cell.n_tokens) {
          take = count < cell.n_tokens;
        } else {
          std::vector<std::size_t> cand = prev.pieces;
          cand.push_back(*piece);
          take = lex_less(vocab, cand, cell.pieces);
        }
      }
      if (take) {
        cell.score = score;
        cell.n_tokens = count;
        cell.pieces = prev.pieces;
        cell.pieces.push_back(*piece);
        cell.reachable = true;
      }
    }
  }
  if (!best[n].reachable) {
    std::size_t bad = n - 1;
    for (std::size_t i = 0; i < n; ++i)
      if (!vocab.find(chars[i])) {
        bad = i;
        break;
      }
    throw OutOfVocabulary(decode_utf8(chars[bad]).front(), byte_at[bad]);
  }

  std::vector<std::string> out;
  out.reserve(best[n].pieces.size());
  for (std::size_t p : best[n].pieces) out.push_back(vocab.token(p));
  return out;
}

std::map<std::string, std::uint64_t> ulm_segment_counts(const Corpus& corpus,
                                                        const UnigramVocab& vocab) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& doc : corpus.documents)
    for (auto& t : ulm_viterbi_segment(doc, vocab)) ++counts[t];
  return counts;
}

namespace {

UnigramVocab reestimate(const UnigramVocab& vocab,
                        const std::map<std::string, std::uint64_t>& counts) {
  std::vector<std::pair<std::string, std::uint64_t>> table;
  table.reserve(vocab.size());
  for (const auto& [token, lp] : vocab.pieces()) {
    const auto it = counts.find(token);
    table.emplace_back(token, it == counts.end() ? 0 : it->second);
  }
  return UnigramVocab::from_counts(table);
}

}  // namespace

UnigramVocab ulm_prune(const UnigramVocab& seed, const Corpus& corpus, std::size_t target_size,
                       Parallelism par) {
  if (target_size < seed.single_char_count())
    throw InvalidArgument("target size " + std::to_string(target_size) + " is below the " +
                          std::to_string(seed.single_char_count()) +
                          " single-character tokens, which are never removed");
  UnigramVocab current = seed;
  while (current.size() > target_size) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < current.size(); ++i)
      if (!current.is_single_char(i)) candidates.push_back(i);

    struct Trial {
      double log_likelihood = 0.0;
      std::map<std::string, std::uint64_t> counts;
    };
    std::vector<Trial> trials(candidates.size());
    parallel_for(candidates.size(), par, [&](std::size_t c) {
      const UnigramVocab reduced = current.without(current.token(candidates[c]));
      trials[c].counts = ulm_segment_counts(corpus, reduced);
      trials[c].log_likelihood = unigram_log_likelihood(trials[c].counts);
    });

    std::size_t best = 0;
    for (std::size_t c = 1; c < candidates.size(); ++c) {
      const double ll = trials[c].log_likelihood;
      const double top = trials[best].log_likelihood;
      if (ll > top || (ll == top && current.token(candidates[c]) < current.token(candidates[best])))
        best = c;
    }
    const UnigramVocab reduced = current.without(current.token(candidates[best]));
    current = reestimate(reduced, trials[best].counts);
  }
  return current;
}

UnigramVocab ulm_seed(const Corpus& corpus, std::size_t seed_size, std::size_t max_piece_chars) {
  if (corpus.empty()) throw InvalidArgument("training corpus is empty");
  if (max_piece_chars < 1) throw InvalidArgument("maximum piece length must be at least 1");
  std::map<std::string, std::uint64_t> freq;
  std::map<std::string, std::uint64_t> singles;
  for (const auto& doc : corpus.documents) {
    const std::vector<std::string> chars = split_utf8_chars(doc);
    for (std::size_t i = 0; i < chars.size(); ++i) {
      ++singles[chars[i]];
      std::string piece = chars[i];
      for (std::size_t len = 2; len <= max_piece_chars && i + len <= chars.size(); ++len) {
        piece += chars[i + len - 1];
        ++freq[piece];
      }
    }
  }
  if (seed_size < singles.size())
    throw InvalidArgument("seed size " + std::to_string(seed_size) + " is below the " +
                          std::to_string(singles.size()) + " distinct characters");

  struct Ranked {
    std::string piece;
    std::uint64_t score;
  };
  std::vector<Ranked> ranked;
  for (const auto& [piece, f] : freq)
    if (f >= 2) ranked.push_back({piece, f * char_length(piece)});
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    return a.score != b.score ? a.score > b.score : a.piece < b.piece;
  });
  ranked.resize(std::min(ranked.size(), seed_size - singles.size()));

  std::vector<std::pair<std::string, std::uint64_t>> table(singles.begin(), singles.end());
  for (const auto& r : ranked) table.emplace_back(r.piece, freq[r.piece]);
  std::sort(table.begin(), table.end());
  const UnigramVocab raw = UnigramVocab::from_counts(table);
  return reestimate(raw, ulm_segment_counts(corpus, raw));
}

}  // namespace tokenlens
