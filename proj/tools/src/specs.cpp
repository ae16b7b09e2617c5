#include "specs.hpp"

#include <charconv>

#include "tokenlens/io.hpp"
#include "tokenlens/merge_training.hpp"
#include "tokenlens/unigram.hpp"

namespace tokenlens::cli {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) return parts;
    start = pos + 1;
  }
}

std::pair<std::string, std::string> split_assignment(std::string_view s, std::string_view flag) {
  const auto eq = s.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == s.size())
    throw UsageError(std::string(flag) + " expects NAME=VALUE, got \"" + std::string(s) + "\"");
  return {std::string(s.substr(0, eq)), std::string(s.substr(eq + 1))};
}

std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw UsageError("invalid " + std::string(what) + " \"" + std::string(s) + "\"");
  return v;
}

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw UsageError("invalid " + std::string(what) + " \"" + std::string(s) + "\"");
  return v;
}

LoadedTokenizer load_tokenizer(std::string_view spec) {
  std::string name;
  std::string_view rest = spec;
  if (const auto eq = spec.find('='); eq != std::string_view::npos) {
    name = std::string(spec.substr(0, eq));
    rest = spec.substr(eq + 1);
  }
  const std::vector<std::string> parts = split(rest, ':');
  const std::string& kind = parts[0];
  if (name.empty()) name = kind;
  if (parts.size() < 2 || parts[1].empty())
    throw UsageError("tokenizer spec \"" + std::string(spec) + "\" names no vocabulary file");

  if (kind == "bpe" || kind == "bpe-bytes") {
    if (parts.size() > 3) throw UsageError("tokenizer spec \"" + std::string(spec) + "\" has extra fields");
    Vocabulary vocab = load_vocab(parts[1]);
    MergeRuleList merges;
    std::vector<std::filesystem::path> files{parts[1]};
    if (parts.size() == 3) {
      merges = load_merges(parts[2], vocab);
      files.emplace_back(parts[2]);
    }
    auto enc = std::make_shared<const BpeEncoder>(std::move(vocab), std::move(merges), kind == "bpe-bytes");
    return {make_bpe_tokenizer(name, std::move(enc)), std::move(files)};
  }
  if (kind == "ulm") {
    if (parts.size() != 2) throw UsageError("tokenizer spec \"" + std::string(spec) + "\" has extra fields");
    auto vocab = std::make_shared<const UnigramVocab>(load_unigram(parts[1]));
    return {make_unigram_tokenizer(name, std::move(vocab)), {parts[1]}};
  }
  throw UsageError("unknown tokenizer kind \"" + kind + "\" (expected bpe, bpe-bytes or ulm)");
}

LoadedMatrix load_v0(std::string_view spec, std::size_t n_tokens) {
  if (spec.starts_with("random:")) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw UsageError("expected random:SEED:DIM, got \"" + std::string(spec) + "\"");
    const auto seed = parse_u64(parts[1], "seed");
    const auto dim = parse_u64(parts[2], "dimension");
    if (dim == 0) throw UsageError("embedding dimension must be positive");
    return {EmbeddingMatrix::random(n_tokens, dim, seed), {}};
  }
  return {load_matrix(std::string(spec)), {std::string(spec)}};
}

EncoderSpec parse_encoder(std::string_view spec) {
  EncoderSpec e;
  if (spec == "identity") {
    e.kind = EncoderSpec::Kind::identity;
    e.depth = 0;
    return e;
  }
  if (spec == "external") {
    e.kind = EncoderSpec::Kind::external;
    return e;
  }
  const auto parts = split(spec, ':');
  if (parts[0] != "toy" || parts.size() < 3 || parts.size() > 4 || (parts.size() == 4 && parts[3] != "linear"))
    throw UsageError("expected toy:SEED:DEPTH[:linear], identity or external, got \"" + std::string(spec) + "\"");
  e.seed = parse_u64(parts[1], "encoder seed");
  e.depth = parse_int(parts[2], "encoder depth");
  if (e.depth < 1) throw UsageError("toy encoder depth must be at least 1");
  e.linear = parts.size() == 4;
  return e;
}

std::unique_ptr<LayerEncoder> make_encoder(const EncoderSpec& spec, std::size_t dim) {
  switch (spec.kind) {
    case EncoderSpec::Kind::identity:
      return std::make_unique<IdentityEncoder>(dim);
    case EncoderSpec::Kind::toy: {
      ToyEncoderOptions o = spec.linear ? ToyEncoderOptions::linear(spec.seed, spec.depth, dim)
                                        : ToyEncoderOptions{spec.seed, spec.depth, dim};
      return std::make_unique<ToyEncoder>(o);
    }
    case EncoderSpec::Kind::external:
      break;
  }
  throw UsageError("an external encoder cannot be run; supply a toy or identity encoder");
}

}  // namespace tokenlens::cli
