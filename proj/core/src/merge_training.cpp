#include "tokenlens/merge_training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "tokenlens/byte_level.hpp"
#include "tokenlens/error.hpp"

namespace tokenlens {

namespace {

using FlatCounts = std::unordered_map<std::uint64_t, std::uint64_t>;

constexpr std::uint64_t pack(TokenId a, TokenId b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}
constexpr TokenId unpack_left(std::uint64_t k) { return static_cast<TokenId>(k >> 32); }
constexpr TokenId unpack_right(std::uint64_t k) { return static_cast<TokenId>(k & 0xFFFFFFFFu); }

void count_document(std::span<const TokenId> s, std::uint64_t weight, FlatCounts& out) {
  bool covered = false;  // s[i] was consumed as the right half of an (t,t) pair
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] == s[i + 1]) {
      if (covered) {
        covered = false;
        continue;
      }
      covered = true;
    } else {
      covered = false;
    }
    out[pack(s[i], s[i + 1])] += weight;
  }
}

// Identical documents segment identically, so they are counted once with a
// multiplicity weight.
struct WeightedDocs {
  std::vector<std::vector<TokenId>> docs;
  std::vector<std::uint64_t> weights;
};

FlatCounts count_weighted(const WeightedDocs& wd, Parallelism par) {
  const std::size_t n = wd.docs.size();
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(par.threads, n));
  std::vector<FlatCounts> partial(workers);
  const std::size_t chunk = n == 0 ? 0 : (n + workers - 1) / workers;
  parallel_for(workers, {static_cast<unsigned>(workers)}, [&](std::size_t w) {
    const std::size_t end = std::min(n, (w + 1) * chunk);
    for (std::size_t i = w * chunk; i < end; ++i)
      count_document(wd.docs[i], wd.weights[i], partial[w]);
  });
  FlatCounts total = std::move(partial[0]);
  for (std::size_t w = 1; w < workers; ++w)
    for (const auto& [k, c] : partial[w]) total[k] += c;
  return total;
}

struct TrainingState {
  Vocabulary vocab;
  MergeRuleList merges;
  WeightedDocs corpus;
  std::vector<std::size_t> doc_slot;  // original document -> deduplicated slot
};

TrainingState initial_state(const Corpus& corpus) {
  if (corpus.empty()) throw InvalidArgument("training corpus is empty");
  std::vector<std::vector<std::string>> chars;
  chars.reserve(corpus.size());
  std::vector<std::string> alphabet;
  for (const auto& doc : corpus.documents) {
    chars.push_back(split_utf8_chars(doc));
    alphabet.insert(alphabet.end(), chars.back().begin(), chars.back().end());
  }
  std::sort(alphabet.begin(), alphabet.end());
  alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());

  TrainingState st;
  st.vocab = Vocabulary(alphabet);
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    auto [it, fresh] = seen.emplace(corpus.documents[d], st.corpus.docs.size());
    if (fresh) {
      std::vector<TokenId> ids;
      ids.reserve(chars[d].size());
      for (const auto& c : chars[d]) ids.push_back(*st.vocab.find(c));
      st.corpus.docs.push_back(std::move(ids));
      st.corpus.weights.push_back(1);
    } else {
      ++st.corpus.weights[it->second];
    }
    st.doc_slot.push_back(it->second);
  }
  return st;
}

void validate_stop(const StopRule& stop, std::size_t alphabet_size) {
  if (const auto* t = std::get_if<TargetVocabSize>(&stop); t && t->size < alphabet_size)
    throw InvalidArgument("target vocabulary size " + std::to_string(t->size) +
                          " is smaller than the " + std::to_string(alphabet_size) +
                          " distinct characters of the corpus");
  if (const auto* f = std::get_if<MinPairFrequency>(&stop); f && f->frequency < 1)
    throw InvalidArgument("minimum pair frequency must be at least 1");
}

bool reached(const StopRule& stop, const TrainingState& st) {
  if (const auto* t = std::get_if<TargetVocabSize>(&stop)) return st.vocab.size() >= t->size;
  if (const auto* m = std::get_if<MaxMerges>(&stop)) return st.merges.size() >= m->merges;
  return false;
}

// Strict total order on candidate pairs used for tie-breaking.
bool tie_precedes(const Vocabulary& v, std::uint64_t a, std::uint64_t b) {
  const std::string& al = v.token(unpack_left(a));
  const std::string& bl = v.token(unpack_left(b));
  const std::string ca = al + v.token(unpack_right(a));
  const std::string cb = bl + v.token(unpack_right(b));
  if (ca != cb) return ca < cb;
  return al < bl;
}

template <class Score>
TrainResult train_loop(const Corpus& corpus, StopRule stop, Parallelism par, Score&& score) {
  TrainingState st = initial_state(corpus);
  validate_stop(stop, st.vocab.size());

  while (!reached(stop, st)) {
    const FlatCounts counts = count_weighted(st.corpus, par);
    if (counts.empty()) break;
    std::uint64_t max_count = 0;
    for (const auto& [k, c] : counts) max_count = std::max(max_count, c);
    if (const auto* f = std::get_if<MinPairFrequency>(&stop); f && max_count < f->frequency)
      break;

    const auto scorer = score(st);
    std::uint64_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    bool have = false;
    for (const auto& [k, c] : counts) {
      const double s = scorer(unpack_left(k), unpack_right(k), c);
      if (!have || s > best_score || (s == best_score && tie_precedes(st.vocab, k, best))) {
        best = k;
        best_score = s;
        have = true;
      }
    }

    const TokenId left = unpack_left(best);
    const TokenId right = unpack_right(best);
    const TokenId result = st.vocab.add(st.vocab.token(left) + st.vocab.token(right));
    st.merges.push_back({left, right, result});
    parallel_for(st.corpus.docs.size(), par, [&](std::size_t i) {
      st.corpus.docs[i] = apply_merge(st.corpus.docs[i], left, right, result);
    });
  }

  TrainResult out;
  out.segmentation.reserve(st.doc_slot.size());
  for (std::size_t slot : st.doc_slot) out.segmentation.push_back(st.corpus.docs[slot]);
  out.model = {std::move(st.vocab), std::move(st.merges)};
  return out;
}

double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

}  // namespace

PairCounts count_adjacent_pairs(std::span<const std::vector<TokenId>> documents, Parallelism par) {
  WeightedDocs wd;
  wd.docs.assign(documents.begin(), documents.end());
  wd.weights.assign(documents.size(), 1);
  PairCounts out;
  if (documents.empty()) return out;
  for (const auto& [k, c] : count_weighted(wd, par)) out[{unpack_left(k), unpack_right(k)}] = c;
  return out;
}

std::vector<TokenId> apply_merge(std::span<const TokenId> tokens, TokenId left, TokenId right,
                                 TokenId result) {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size();) {
    if (i + 1 < tokens.size() && tokens[i] == left && tokens[i + 1] == right) {
      out.push_back(result);
      i += 2;
    } else {
      out.push_back(tokens[i]);
      ++i;
    }
  }
  return out;
}

TrainResult bpe_train(const Corpus& corpus, StopRule stop, Parallelism par) {
  return train_loop(corpus, stop, par, [](const TrainingState&) {
    return [](TokenId, TokenId, std::uint64_t count) { return static_cast<double>(count); };
  });
}

double wordpiece_merge_score(std::uint64_t count_a, std::uint64_t count_b, std::uint64_t count_ab,
                             std::uint64_t corpus_len) {
  if (count_ab < 1) throw InvalidArgument("pair count must be at least 1");
  if (count_ab > std::min(count_a, count_b))
    throw InvalidArgument("pair count exceeds a constituent token count");
  if (count_ab > corpus_len) throw InvalidArgument("pair count exceeds corpus length");
  const double ab = static_cast<double>(count_ab);
  const double a = static_cast<double>(count_a);
  const double b = static_cast<double>(count_b);
  const double rest = static_cast<double>(corpus_len - count_ab);
  return ab * std::log(ab / (a * b)) - xlogx(rest);
}

TrainResult wordpiece_train(const Corpus& corpus, StopRule stop, Parallelism par) {
  return train_loop(corpus, stop, par, [](const TrainingState& st) {
    std::vector<std::uint64_t> freq(st.vocab.size(), 0);
    std::uint64_t total = 0;
    for (std::size_t d = 0; d < st.corpus.docs.size(); ++d) {
      for (TokenId t : st.corpus.docs[d]) freq[t] += st.corpus.weights[d];
      total += st.corpus.docs[d].size() * st.corpus.weights[d];
    }
    return [freq = std::move(freq), total](TokenId a, TokenId b, std::uint64_t count) {
      return wordpiece_merge_score(freq[a], freq[b], count, total);
    };
  });
}

BpeEncoder::BpeEncoder(Vocabulary vocab, MergeRuleList merges, bool byte_level)
    : vocab_(std::move(vocab)), merges_(std::move(merges)), byte_level_(byte_level) {
  ranks_.reserve(merges_.size());
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const MergeRule& m = merges_[r];
    if (m.left >= vocab_.size() || m.right >= vocab_.size() || m.result >= vocab_.size())
      throw InvalidArgument("merge rule " + std::to_string(r) + " references an unknown token id");
    // A repeated pair keeps its first (lowest) rank.
    ranks_.try_emplace(pack(m.left, m.right), RankedMerge{r, m.result});
  }
}

std::vector<TokenId> BpeEncoder::encode(std::string_view text) const {
  const std::string mapped = byte_level_ ? byte_level_encode(text) : std::string();
  const std::string_view source = byte_level_ ? std::string_view(mapped) : text;

  std::vector<TokenId> ids;
  ids.reserve(source.size());
  std::size_t offset = 0;
  for (const std::string& ch : split_utf8_chars(source)) {
    const auto id = vocab_.find(ch);
    if (!id) throw OutOfVocabulary(decode_utf8(ch).front(), offset);
    ids.push_back(*id);
    offset += byte_level_ ? 1 : ch.size();  // report offsets in the caller's bytes
  }

  while (ids.size() > 1) {
    const RankedMerge* best = nullptr;
    std::uint64_t best_key = 0;
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      const std::uint64_t key = pack(ids[i], ids[i + 1]);
      const auto it = ranks_.find(key);
      if (it != ranks_.end() && (!best || it->second.rank < best->rank)) {
        best = &it->second;
        best_key = key;
      }
    }
    if (!best) break;
    ids = apply_merge(ids, unpack_left(best_key), unpack_right(best_key), best->result);
  }
  return ids;
}

std::vector<TokenId> bpe_encode(std::string_view text, const Vocabulary& vocab,
                                const MergeRuleList& merges) {
  return BpeEncoder(vocab, merges).encode(text);
}

}  // namespace tokenlens
