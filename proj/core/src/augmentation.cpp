#include "tokenlens/augmentation.hpp"

#include <algorithm>
#include <cmath>

#include "tokenlens/error.hpp"

namespace tokenlens {

std::set<char32_t> select_oov_chars(const Corpus& corpus, const TokenizerHandle& tok) {
  std::set<char32_t> seen;
  for (const auto& doc : corpus.documents)
    for (char32_t c : decode_utf8(doc)) seen.insert(c);
  std::set<char32_t> out;
  for (char32_t c : seen)
    if (tok.encode(encode_utf8(c)).size() >= 2) out.insert(c);
  return out;
}

AugmentationPlan augment_from_reference(const TokenizerHandle& tok, const EmbeddingMatrix& v0,
                                        const HiddenMatrix& vl, const std::set<char32_t>& chars,
                                        const DerivationStrategy& strategy, const PooledQuery& query,
                                        Parallelism par) {
  if (tok.vocab_size() > v0.n_tokens())
    throw InvalidArgument("tokenizer \"" + tok.name() + "\" has " + std::to_string(tok.vocab_size()) +
                          " tokens but V0 has only " + std::to_string(v0.n_tokens()) + " rows");
  const EmbeddingDeriver deriver(v0, vl, strategy);

  AugmentationPlan plan;
  plan.strategy = strategy;
  plan.base_vocab_size = v0.n_tokens();
  plan.dim = v0.dim();
  plan.metadata["distance"] = std::string(distance_name(strategy.distance));
  plan.metadata["strategy"] = strategy.label();
  plan.metadata["layer"] = std::to_string(strategy.layer);
  plan.metadata["tokenizer"] = tok.name();
  for (char32_t c : chars) {
    AugmentationEntry e;
    e.character = c;
    e.token = encode_utf8(c);
    e.constituents = tok.encode(e.token);
    if (e.constituents.size() < 2)
      throw InvalidArgument("character \"" + e.token + "\" already encodes to a single token");
    plan.entries.push_back(std::move(e));
  }
  parallel_for(plan.entries.size(), par, [&](std::size_t i) {
    AugmentationEntry& e = plan.entries[i];
    e.embedding = deriver.predict(query(e.character, e.constituents));
  });
  return plan;
}

AugmentationPlan augment(const TokenizerHandle& tok, const EmbeddingMatrix& v0,
                         const LayerEncoder& enc, const std::set<char32_t>& chars,
                         const DerivationStrategy& strategy, Parallelism par) {
  strategy.validate();
  const HiddenMatrix vl = build_reference(enc, v0, strategy.layer, par);
  AugmentationPlan plan = augment_from_reference(
      tok, v0, vl, chars, strategy,
      [&](char32_t, std::span<const TokenId> ids) {
        return pooled_hidden(enc, v0.gather(ids), strategy.layer);
      },
      par);
  plan.metadata["encoder"] = enc.describe();
  return plan;
}

AugmentedTokenizer::AugmentedTokenizer(const TokenizerHandle& base, const AugmentationPlan& plan)
    : base_(base), plan_(plan) {
  for (std::size_t i = 0; i < plan_.entries.size(); ++i)
    entry_of_.emplace(plan_.entries[i].character, i);
}

std::vector<TokenId> AugmentedTokenizer::encode(std::string_view text) const {
  if (entry_of_.empty()) return base_.encode(text);
  std::vector<TokenId> out;
  std::string pending;
  const auto flush = [&] {
    if (pending.empty()) return;
    const std::vector<TokenId> ids = base_.encode(pending);
    out.insert(out.end(), ids.begin(), ids.end());
    pending.clear();
  };
  for (char32_t c : decode_utf8(text)) {
    const auto it = entry_of_.find(c);
    if (it == entry_of_.end()) {
      pending += encode_utf8(c);
    } else {
      flush();
      out.push_back(plan_.new_token_id(it->second));
    }
  }
  flush();
  return out;
}

Sequence AugmentedTokenizer::embed(std::span<const TokenId> ids, const EmbeddingMatrix& v0) const {
  Sequence out(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(v0.dim()));
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const auto row = static_cast<Eigen::Index>(p);
    if (is_new(ids[p]))
      out.row(row) = plan_.entries.at(ids[p] - plan_.base_vocab_size).embedding.transpose();
    else
      out.row(row) = v0.row(ids[p]).transpose();
  }
  return out;
}

double eval_similarity(const LayerEncoder& enc, std::string_view sentence,
                       const TokenizerHandle& tok, const EmbeddingMatrix& v0,
                       const AugmentationPlan& plan, int last_layer) {
  if (sentence.empty()) throw InvalidArgument("cannot evaluate an empty sentence");
  if (plan.dim != v0.dim()) throw InvalidArgument("plan dimension does not match V0");
  const AugmentedTokenizer augmented(tok, plan);
  const std::vector<TokenId> original_ids = tok.encode(sentence);
  const std::vector<TokenId> augmented_ids = augmented.encode(sentence);
  if (original_ids == augmented_ids) return 1.0;

  const Vector a = pooled_hidden(enc, v0.gather(original_ids), last_layer);
  const Vector b = pooled_hidden(enc, augmented.embed(augmented_ids, v0), last_layer);
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw Error("pooled hidden state is the zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

SimilarityReport corpus_similarity(const LayerEncoder& enc, const Corpus& corpus,
                                   const TokenizerHandle& tok, const EmbeddingMatrix& v0,
                                   const AugmentationPlan& plan, int last_layer, Parallelism par) {
  if (corpus.empty()) throw InvalidArgument("similarity over an empty corpus");
  SimilarityReport r;
  r.per_sentence.resize(corpus.size());
  parallel_for(corpus.size(), par, [&](std::size_t i) {
    r.per_sentence[i] = eval_similarity(enc, corpus.documents[i], tok, v0, plan, last_layer);
  });
  double sum = 0.0;
  for (double s : r.per_sentence) sum += s;
  r.mean = sum / static_cast<double>(r.per_sentence.size());
  return r;
}

double fraction_new_tokens(const Corpus& corpus, const TokenizerHandle& tok,
                           const AugmentationPlan& plan) {
  if (corpus.empty()) throw InvalidArgument("new-token fraction of an empty corpus");
  const AugmentedTokenizer augmented(tok, plan);
  std::size_t total = 0;
  std::size_t fresh = 0;
  for (const auto& doc : corpus.documents) {
    for (TokenId id : augmented.encode(doc)) {
      ++total;
      fresh += augmented.is_new(id);
    }
  }
  if (total == 0) throw InvalidArgument("corpus encodes to zero tokens");
  return static_cast<double>(fresh) / static_cast<double>(total);
}

}  // namespace tokenlens
