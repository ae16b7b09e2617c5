#include "tokenlens/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "tokenlens/error.hpp"
#include "tokenlens/text.hpp"

namespace tokenlens {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

float get_f32(std::string_view in, std::size_t pos) { return std::bit_cast<float>(get_u32(in, pos)); }

std::string floats_le(const Vector& v) {
  std::string out;
  out.reserve(static_cast<std::size_t>(v.size()) * 4);
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f32(out, static_cast<float>(v(i)));
  return out;
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string(what) + ": " + e.what());
  }
}

bool looks_like_json(std::string_view text, char open) {
  const auto pos = text.find_first_not_of(" \t\r\n");
  return pos != std::string_view::npos && text[pos] == open;
}

TokenId require_token(const Vocabulary& vocab, const std::string& token, std::size_t line) {
  const auto id = vocab.find(token);
  if (!id)
    throw InvalidArgument("merge " + std::to_string(line) + " references unknown token \"" + token + "\"");
  return *id;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------

Vocabulary parse_vocab(std::string_view text) {
  if (!looks_like_json(text, '{')) return Vocabulary(split_lines(text));
  const json j = parse_json(text, "vocabulary JSON");
  std::vector<std::string> tokens(j.size());
  std::vector<bool> filled(j.size(), false);
  for (const auto& [token, id_json] : j.items()) {
    if (!id_json.is_number_unsigned())
      throw InvalidArgument("vocabulary id for \"" + token + "\" is not a non-negative integer");
    const auto id = id_json.get<std::size_t>();
    if (id >= tokens.size() || filled[id])
      throw InvalidArgument("vocabulary ids are not dense 0..n-1 (at \"" + token + "\")");
    tokens[id] = token;
    filled[id] = true;
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary load_vocab(const std::filesystem::path& path) { return parse_vocab(read_utf8_file(path)); }

MergeRuleList parse_merges(std::string_view text, const Vocabulary& vocab) {
  std::vector<std::pair<std::string, std::string>> pairs;
  if (looks_like_json(text, '[')) {
    const json j = parse_json(text, "merges JSON");
    for (const auto& m : j) {
      if (m.is_array() && m.size() == 2) {
        pairs.emplace_back(m[0].get<std::string>(), m[1].get<std::string>());
      } else if (m.is_string()) {
        const std::string s = m.get<std::string>();
        const auto space = s.find(' ');
        if (space == std::string::npos) throw InvalidArgument("malformed merge \"" + s + "\"");
        pairs.emplace_back(s.substr(0, space), s.substr(space + 1));
      } else {
        throw InvalidArgument("merge entries must be [left, right] pairs");
      }
    }
  } else {
    std::size_t n = 0;
    for (const auto& line : split_lines(text)) {
      ++n;
      if (line.empty() || (n == 1 && line.starts_with("#version"))) continue;
      const auto space = line.find(' ');
      if (space == std::string::npos || line.find(' ', space + 1) != std::string::npos)
        throw InvalidArgument("malformed merge on line " + std::to_string(n) + ": \"" + line + "\"");
      pairs.emplace_back(line.substr(0, space), line.substr(space + 1));
    }
  }
  MergeRuleList rules;
  rules.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [l, r] = pairs[i];
    rules.push_back({require_token(vocab, l, i + 1), require_token(vocab, r, i + 1),
                     require_token(vocab, l + r, i + 1)});
  }
  return rules;
}

MergeRuleList load_merges(const std::filesystem::path& path, const Vocabulary& vocab) {
  return parse_merges(read_utf8_file(path), vocab);
}

// One entry per line, in id / rank order.
std::string vocab_json(const Vocabulary& vocab) {
  std::string out = "{";
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out += i == 0 ? "\n  " : ",\n  ";
    out += json(vocab.token(static_cast<TokenId>(i))).dump() + ": " + std::to_string(i);
  }
  return out + (vocab.empty() ? "}\n" : "\n}\n");
}

std::string merges_json(const MergeRuleList& merges, const Vocabulary& vocab) {
  std::string out = "[";
  for (std::size_t i = 0; i < merges.size(); ++i) {
    out += i == 0 ? "\n  [" : ",\n  [";
    out += json(vocab.token(merges[i].left)).dump() + ", " + json(vocab.token(merges[i].right)).dump() + "]";
  }
  return out + (merges.empty() ? "]\n" : "\n]\n");
}

std::string unigram_json(const UnigramVocab& vocab) {
  json pieces = json::array();
  for (const auto& [token, lp] : vocab.pieces()) pieces.push_back({token, lp});
  return json{{"type", "Unigram"}, {"vocab", std::move(pieces)}}.dump(2) + "\n";
}

UnigramVocab load_unigram(const std::filesystem::path& path) {
  const json j = parse_json(read_utf8_file(path), "unigram JSON");
  if (!j.contains("vocab") || !j["vocab"].is_array())
    throw InvalidArgument(path.string() + ": missing \"vocab\" array");
  std::vector<std::pair<std::string, double>> pieces;
  for (const auto& p : j["vocab"]) pieces.emplace_back(p.at(0).get<std::string>(), p.at(1).get<double>());
  return UnigramVocab(std::move(pieces));
}

// ---------------------------------------------------------------------------

std::string encode_matrix(const EmbeddingMatrix& m) {
  if (m.n_tokens() > UINT32_MAX || m.dim() > UINT32_MAX)
    throw InvalidArgument("matrix too large for a u32 header");
  std::string out;
  out.reserve(8 + m.n_tokens() * m.dim() * 4);
  put_u32(out, static_cast<std::uint32_t>(m.n_tokens()));
  put_u32(out, static_cast<std::uint32_t>(m.dim()));
  const FloatRows& d = m.data();
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j) put_f32(out, d(i, j));
  return out;
}

EmbeddingMatrix decode_matrix(std::string_view bytes) {
  if (bytes.size() < 8) throw InvalidArgument("matrix file shorter than its 8-byte header");
  const std::uint64_t rows = get_u32(bytes, 0);
  const std::uint64_t cols = get_u32(bytes, 4);
  if (bytes.size() != 8 + rows * cols * 4)
    throw InvalidArgument("matrix file size " + std::to_string(bytes.size()) + " does not match header " +
                          std::to_string(rows) + " x " + std::to_string(cols));
  FloatRows d(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t pos = 8;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j, pos += 4) d(i, j) = get_f32(bytes, pos);
  return EmbeddingMatrix(std::move(d));
}

void save_matrix(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  write_file(path, encode_matrix(m));
}

EmbeddingMatrix load_matrix(const std::filesystem::path& path) {
  try {
    return decode_matrix(read_file(path));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& matrix_path) {
  return matrix_path.string() + ".json";
}

void save_sidecar(const std::filesystem::path& matrix_path, const MatrixSidecar& meta) {
  write_file(sidecar_path(matrix_path),
             json{{"layer", meta.layer}, {"provenance", meta.provenance}}.dump(2) + "\n");
}

MatrixSidecar load_sidecar(const std::filesystem::path& matrix_path) {
  const json j = parse_json(read_utf8_file(sidecar_path(matrix_path)), "matrix sidecar");
  MatrixSidecar meta;
  meta.layer = j.value("layer", 0);
  meta.provenance = j.value("provenance", std::string());
  return meta;
}

// ---------------------------------------------------------------------------

std::string plan_json(const AugmentationPlan& plan, const std::string& companion_name) {
  json entries = json::array();
  for (const auto& e : plan.entries) {
    entries.push_back({{"codepoint", static_cast<std::uint32_t>(e.character)},
                       {"token", e.token},
                       {"constituents", e.constituents},
                       {"embedding", base64_encode(floats_le(e.embedding))}});
  }
  const DerivationStrategy& s = plan.strategy;
  json j = {{"format", "tokenlens-augmentation-plan"},
            {"version", 1},
            {"base_vocab_size", plan.base_vocab_size},
            {"dim", plan.dim},
            {"strategy",
             {{"kind", strategy_kind_name(s.kind)},
              {"k", s.k},
              {"layer", s.layer},
              {"distance", distance_name(s.distance)},
              {"ridge", s.ridge}}},
            {"metadata", plan.metadata},
            {"new_token_fraction", plan.new_token_fraction},
            {"companion_matrix", companion_name},
            {"entries", std::move(entries)}};
  return j.dump(2) + "\n";
}

AugmentationPlan parse_plan(std::string_view text) {
  const json j = parse_json(text, "augmentation plan");
  try {
    if (j.at("format") != "tokenlens-augmentation-plan") throw InvalidArgument("not an augmentation plan");
    AugmentationPlan plan;
    plan.base_vocab_size = j.at("base_vocab_size").get<std::size_t>();
    plan.dim = j.at("dim").get<std::size_t>();
    const json& s = j.at("strategy");
    const std::string kind = s.at("kind").get<std::string>();
    plan.strategy.kind = kind == "knn"      ? StrategyKind::knn
                         : kind == "linreg" ? StrategyKind::linreg
                         : kind == "local_linreg"
                             ? StrategyKind::local_linreg
                             : throw InvalidArgument("unknown strategy kind \"" + kind + "\"");
    plan.strategy.k = s.at("k").get<std::size_t>();
    plan.strategy.layer = s.at("layer").get<int>();
    plan.strategy.distance = parse_distance(s.at("distance").get<std::string>());
    plan.strategy.ridge = s.at("ridge").get<double>();
    plan.metadata = j.value("metadata", std::map<std::string, std::string>{});
    plan.new_token_fraction = j.value("new_token_fraction", std::map<std::string, double>{});
    for (const auto& je : j.at("entries")) {
      AugmentationEntry e;
      e.character = static_cast<char32_t>(je.at("codepoint").get<std::uint32_t>());
      e.token = je.at("token").get<std::string>();
      if (e.token != encode_utf8(e.character))
        throw InvalidArgument("plan entry token does not match its code point");
      e.constituents = je.at("constituents").get<std::vector<TokenId>>();
      const std::string raw = base64_decode(je.at("embedding").get<std::string>());
      if (raw.size() != plan.dim * 4) throw InvalidArgument("plan embedding has the wrong length");
      e.embedding.resize(static_cast<Eigen::Index>(plan.dim));
      for (std::size_t i = 0; i < plan.dim; ++i) e.embedding(static_cast<Eigen::Index>(i)) = get_f32(raw, 4 * i);
      plan.entries.push_back(std::move(e));
    }
    return plan;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("augmentation plan: ") + e.what());
  }
}

void save_plan(const std::filesystem::path& path, const AugmentationPlan& plan) {
  std::filesystem::path companion = path;
  companion.replace_extension(".bin");
  FloatRows rows(static_cast<Eigen::Index>(plan.entries.size()), static_cast<Eigen::Index>(plan.dim));
  for (std::size_t i = 0; i < plan.entries.size(); ++i)
    rows.row(static_cast<Eigen::Index>(i)) = plan.entries[i].embedding.cast<float>().transpose();
  write_file(path, plan_json(plan, companion.filename().string()));
  if (plan.dim > 0) save_matrix(companion, EmbeddingMatrix(std::move(rows)));
}

AugmentationPlan load_plan(const std::filesystem::path& path) {
  try {
    return parse_plan(read_utf8_file(path));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw InvalidArgument("base64 length is not a multiple of 4");
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw InvalidArgument("invalid base64");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the bytes produced by '=' padding.
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

}  // namespace tokenlens
