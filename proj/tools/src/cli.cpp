#include "tokenlens_cli/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "manifest.hpp"
#include "specs.hpp"
#include "tokenlens/augmentation.hpp"
#include "tokenlens/byte_level.hpp"
#include "tokenlens/error.hpp"
#include "tokenlens/format.hpp"
#include "tokenlens/io.hpp"
#include "tokenlens/merge_training.hpp"
#include "tokenlens/premium.hpp"
#include "tokenlens/unigram.hpp"
#include "tokenlens/vocab_analysis.hpp"

namespace tokenlens::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// Flags that never influence report contents.
const std::set<std::string> kUnrecordedFlags = {"--help", "--threads", "--out", "--json", "--emit-chars"};

struct Context {
  RunManifest manifest;
  Parallelism par;
  std::ostream& out;
};

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// --------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string algorithm;
  std::string corpus;
  std::optional<std::size_t> vocab_size;
  std::optional<std::uint64_t> min_freq;
  std::optional<std::size_t> merges;
  std::size_t seed_size = 2000;
  std::size_t max_piece_len = 8;
  bool byte_level = false;
  std::string out;
};

void add_train(CLI::App& app, TrainOptions& o) {
  auto* c = app.add_subcommand("train", "Train a BPE, WordPiece-style or unigram (ULM) vocabulary");
  c->add_option("--algorithm", o.algorithm, "bpe, wordpiece or ulm")
      ->required()
      ->check(CLI::IsMember({"bpe", "wordpiece", "ulm"}));
  c->add_option("--corpus", o.corpus, "Training corpus, one document per line")->required();
  c->add_option("--vocab-size", o.vocab_size, "Stop at this vocabulary size");
  c->add_option("--min-freq", o.min_freq, "Stop when the best pair count falls below this");
  c->add_option("--merges", o.merges, "Stop after this many merges");
  c->add_option("--seed-size", o.seed_size, "ULM seed inventory size");
  c->add_option("--max-piece-len", o.max_piece_len, "ULM longest seed piece, in characters");
  c->add_flag("--byte-level", o.byte_level, "Train over GPT-2 style byte symbols (bpe, wordpiece)");
  c->add_option("--out", o.out, "Output directory")->required();
}

int run_train(const TrainOptions& o, Context& ctx) {
  const int stops = o.vocab_size.has_value() + o.min_freq.has_value() + o.merges.has_value();
  if (o.algorithm == "ulm") {
    if (!o.vocab_size || o.min_freq || o.merges) throw UsageError("ulm training needs --vocab-size only");
    if (o.byte_level) throw UsageError("--byte-level applies to bpe and wordpiece only");
    if (o.max_piece_len == 0) throw UsageError("--max-piece-len must be positive");
  } else if (stops != 1) {
    throw UsageError("give exactly one of --vocab-size, --min-freq, --merges");
  }

  Corpus corpus = load_corpus(o.corpus);
  ctx.manifest.add_input(o.corpus);
  if (corpus.empty()) throw InvalidArgument("corpus " + o.corpus + " has no non-empty lines");
  if (o.byte_level)
    for (auto& doc : corpus.documents) doc = byte_level_encode(doc);

  const fs::path dir = o.out;
  fs::create_directories(dir);
  if (o.algorithm == "ulm") {
    const UnigramVocab seed = ulm_seed(corpus, o.seed_size, o.max_piece_len);
    const UnigramVocab vocab = ulm_prune(seed, corpus, *o.vocab_size, ctx.par);
    std::vector<std::string> tokens;
    for (const auto& [t, lp] : vocab.pieces()) tokens.push_back(t);
    write_file(dir / "unigram.json", unigram_json(vocab));
    write_file(dir / "vocab.json", vocab_json(Vocabulary(std::move(tokens))));
    ctx.manifest.outputs = {(dir / "unigram.json").string(), (dir / "vocab.json").string()};
    ctx.out << "ulm: " << vocab.size() << " tokens -> " << dir.string() << "\n";
  } else {
    StopRule stop = o.vocab_size ? StopRule{TargetVocabSize{*o.vocab_size}}
                    : o.min_freq ? StopRule{MinPairFrequency{*o.min_freq}}
                                 : StopRule{MaxMerges{*o.merges}};
    const TrainResult r = o.algorithm == "bpe" ? bpe_train(corpus, stop, ctx.par)
                                               : wordpiece_train(corpus, stop, ctx.par);
    write_file(dir / "vocab.json", vocab_json(r.model.vocab));
    write_file(dir / "merges.json", merges_json(r.model.merges, r.model.vocab));
    ctx.manifest.outputs = {(dir / "vocab.json").string(), (dir / "merges.json").string()};
    ctx.out << o.algorithm << ": " << r.model.vocab.size() << " tokens, " << r.model.merges.size()
            << " merges -> " << dir.string() << "\n";
  }
  write_manifest(ctx.manifest, dir);
  return kExitOk;
}

// --------------------------------------------------------------------------
// compare

struct CompareOptions {
  std::vector<std::string> vocabs;
  std::string metric = "jaccard";
  std::string normalize = "default";
  std::vector<std::string> byte_level;
  bool breakdown = false;
  std::string out;
};

void add_compare(CLI::App& app, CompareOptions& o) {
  auto* c = app.add_subcommand("compare", "Pairwise vocabulary overlap, or the per-vocabulary breakdown table");
  c->add_option("--vocab", o.vocabs, "NAME=PATH, repeatable; JSON token->id map or one token per line")
      ->required();
  c->add_option("--metric", o.metric, "jaccard or containment")
      ->check(CLI::IsMember({"jaccard", "containment"}));
  c->add_option("--normalize", o.normalize, "default, none, or a rules JSON file");
  c->add_option("--byte-level", o.byte_level, "NAME of a byte-level vocabulary to decode first, repeatable");
  c->add_flag("--breakdown", o.breakdown, "Write the breakdown TSV instead of the overlap matrix");
  c->add_option("--out", o.out, "Output CSV (TSV with --breakdown)")->required();
}

NormalizationRules load_rules(const std::string& spec, RunManifest& m) {
  if (spec == "default") return NormalizationRules::defaults();
  if (spec == "none") return NormalizationRules::none();
  m.add_input(spec);
  const json j = json::parse(read_utf8_file(spec), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw InvalidArgument(spec + ": normalization rules must be a JSON object");
  NormalizationRules r;
  try {
    for (const auto& p : j.value("prefix_markers", json::array()))
      r.prefix_markers.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    for (const auto& s : j.value("strip_continuation", json::array())) r.strip_continuation.push_back(s.get<std::string>());
  } catch (const json::exception& e) {
    throw InvalidArgument(spec + ": " + e.what());
  }
  return r;
}

std::string rules_json(const NormalizationRules& r) {
  ordered_json j;
  j["prefix_markers"] = r.prefix_markers;
  j["strip_continuation"] = r.strip_continuation;
  return j.dump();
}

int run_compare(const CompareOptions& o, Context& ctx) {
  if (!o.breakdown && o.vocabs.size() < 2) throw UsageError("need >= 2 vocabularies to compare");
  const std::set<std::string> byte_level(o.byte_level.begin(), o.byte_level.end());
  std::vector<std::pair<std::string, std::string>> named;
  std::set<std::string> names;
  for (const auto& v : o.vocabs) {
    named.push_back(split_assignment(v, "--vocab"));
    if (!names.insert(named.back().first).second) throw UsageError("duplicate vocabulary name " + named.back().first);
  }
  for (const auto& n : byte_level)
    if (!names.count(n)) throw UsageError("--byte-level names unknown vocabulary " + n);

  const NormalizationRules rules = load_rules(o.normalize, ctx.manifest);
  rules.validate();
  ctx.manifest.normalization = rules_json(rules);

  std::vector<NamedVocab> vocabs;
  for (const auto& [name, path] : named) {
    ctx.manifest.add_input(path);
    Vocabulary raw = load_vocab(path);
    if (byte_level.count(name)) {
      std::vector<std::string> decoded;
      for (const auto& t : raw.tokens()) decoded.push_back(byte_level_decode(t));
      raw = Vocabulary(std::move(decoded));
    }
    NormalizedVocab nv = normalize_vocab(raw, rules);
    ctx.out << name << ": " << raw.size() << " tokens, " << nv.vocab.size() << " after normalization ("
            << nv.collapsed << " collapsed, " << nv.dropped_empty << " empty)\n";
    vocabs.push_back({name, std::move(nv.vocab)});
  }

  std::string body;
  if (o.breakdown) {
    std::vector<NamedBreakdown> rows;
    for (const auto& v : vocabs) rows.push_back({v.name, vocab_breakdown(v.vocab)});
    body = breakdown_tsv(rows);
  } else {
    body = comparison_csv(comparison_matrix(vocabs, parse_metric(o.metric), ctx.par));
  }
  ensure_parent(o.out);
  write_file(o.out, manifest_comment(ctx.manifest) + body);
  ctx.manifest.outputs = {o.out};
  write_manifest(ctx.manifest, o.out);
  return kExitOk;
}

// --------------------------------------------------------------------------
// premium

struct PremiumOptions {
  std::vector<std::string> tokenizers;
  std::string english;
  std::vector<std::string> targets;
  std::string aggregate = "mean";
  std::string out;
  std::string json_out;
  bool verbose = false;
};

void add_premium(CLI::App& app, PremiumOptions& o) {
  auto* c = app.add_subcommand("premium", "Tokenization premium of target languages relative to English");
  c->add_option("--tokenizer", o.tokenizers, "[NAME=]KIND:FILE[:FILE], repeatable (bpe, bpe-bytes, ulm)")
      ->required();
  c->add_option("--english", o.english, "English side, one sentence per line")->required();
  c->add_option("--target", o.targets, "LANG:SCRIPT=PATH aligned with --english, repeatable")->required();
  c->add_option("--aggregate", o.aggregate, "mean (of per-sentence ratios) or totals")
      ->check(CLI::IsMember({"mean", "totals"}));
  c->add_option("--out", o.out, "Output CSV (two decimals)")->required();
  c->add_option("--json", o.json_out, "Also write full-precision JSON here");
  c->add_flag("--verbose", o.verbose, "Include per-sentence ratios in the JSON");
}

int run_premium(const PremiumOptions& o, Context& ctx) {
  std::vector<std::pair<std::string, std::string>> targets;
  for (const auto& t : o.targets) {
    auto [code, path] = split_assignment(t, "--target");
    const auto parts = split(code, ':');
    if (parts.size() != 2 || parts[0].empty() || parts[1].empty())
      throw UsageError("--target expects LANG:SCRIPT=PATH, got \"" + t + "\"");
    targets.emplace_back(code, path);
  }
  std::vector<TokenizerHandle> toks;
  for (const auto& spec : o.tokenizers) {
    LoadedTokenizer lt = load_tokenizer(spec);
    for (const auto& f : lt.files) ctx.manifest.add_input(f);
    toks.push_back(std::move(lt.handle));
  }
  ctx.manifest.add_input(o.english);
  std::vector<ParallelCorpus> corpora;
  for (const auto& [code, path] : targets) {
    const auto parts = split(code, ':');
    ctx.manifest.add_input(path);
    corpora.push_back(load_parallel_corpus(o.english, path, parts[0], parts[1]));
    if (corpora.back().n_skipped > 0)
      ctx.out << corpora.back().label() << ": skipped " << corpora.back().n_skipped << " pairs with an empty side\n";
  }
  const PremiumMatrix m = premium_matrix(toks, corpora, parse_aggregate(o.aggregate), ctx.par);
  for (std::size_t r = 0; r < m.languages.size(); ++r)
    for (std::size_t c = 0; c < m.tokenizers.size(); ++c)
      if (!m.cells[r][c].report)
        ctx.out << m.languages[r] << " / " << m.tokenizers[c] << ": " << m.cells[r][c].error << "\n";

  ensure_parent(o.out);
  write_file(o.out, manifest_comment(ctx.manifest) + premium_csv(m));
  ctx.manifest.outputs = {o.out};
  if (!o.json_out.empty()) {
    ordered_json j = ordered_json::parse(premium_json(m, o.verbose));
    j["manifest_sha256"] = ctx.manifest.digest();
    ensure_parent(o.json_out);
    write_file(o.json_out, j.dump(2) + "\n");
    ctx.manifest.outputs.push_back(o.json_out);
  }
  write_manifest(ctx.manifest, o.out);
  return kExitOk;
}

// --------------------------------------------------------------------------
// augment

struct AugmentOptions {
  std::string tokenizer;
  std::string v0;
  std::string encoder = "toy:0:1";
  std::vector<std::string> hidden;
  std::vector<std::string> pooled;
  std::vector<int> layers{0};
  std::vector<std::string> strategies{"linreg"};
  std::string distance = "euclidean";
  double ridge = kDefaultRidge;
  std::string corpus;
  std::string emit_chars;
  std::string out;
};

void add_augment(CLI::App& app, AugmentOptions& o) {
  auto* c = app.add_subcommand("augment", "Derive input embeddings for characters that need several tokens");
  c->add_option("--tokenizer", o.tokenizer, "[NAME=]KIND:FILE[:FILE]")->required();
  c->add_option("--v0", o.v0, "Input embedding matrix file, or random:SEED:DIM")->required();
  c->add_option("--encoder", o.encoder, "toy:SEED:DEPTH[:linear], identity, or external");
  c->add_option("--hidden", o.hidden, "LAYER=PATH reference matrix V_l (external encoder), repeatable");
  c->add_option("--pooled", o.pooled,
                "LAYER=PATH pooled hidden vectors, one row per selected character in code point order "
                "(external encoder), repeatable");
  c->add_option("--layer", o.layers, "Reference layer, repeatable");
  c->add_option("--strategy", o.strategies, "knn:K, linreg or local_linreg:K, repeatable");
  c->add_option("--distance", o.distance, "euclidean or cosine")->check(CLI::IsMember({"euclidean", "cosine"}));
  c->add_option("--ridge", o.ridge, "Ridge penalty for the regression strategies");
  c->add_option("--corpus", o.corpus, "Corpus whose multi-token characters are augmented")->required();
  c->add_option("--emit-chars", o.emit_chars, "Write the selected characters and their constituents as JSON");
  c->add_option("--out", o.out, "Plan file, or a directory when several (layer, strategy) cells are given")
      ->required();
}

std::string file_label(const DerivationStrategy& s) {
  std::string label = s.label();
  for (char& c : label)
    if (c == ':') c = '-';
  return label;
}

std::map<int, std::string> layer_paths(const std::vector<std::string>& specs, const char* flag) {
  std::map<int, std::string> out;
  for (const auto& s : specs) {
    auto [layer, path] = split_assignment(s, flag);
    out[parse_int(layer, std::string(flag) + " layer")] = path;
  }
  return out;
}

int run_augment(const AugmentOptions& o, Context& ctx) {
  const EncoderSpec enc_spec = parse_encoder(o.encoder);
  std::vector<DerivationStrategy> cells;
  for (int layer : o.layers) {
    if (layer < 0) throw UsageError("--layer must be non-negative");
    if (enc_spec.kind != EncoderSpec::Kind::external && layer > enc_spec.depth)
      throw UsageError("layer " + std::to_string(layer) + " exceeds encoder depth " + std::to_string(enc_spec.depth));
    for (const auto& spec : o.strategies) {
      try {
        DerivationStrategy s = DerivationStrategy::parse(spec, layer);
        s.distance = parse_distance(o.distance);
        s.ridge = o.ridge;
        s.validate();
        cells.push_back(s);
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
    }
  }
  const auto hidden_paths = layer_paths(o.hidden, "--hidden");
  const auto pooled_paths = layer_paths(o.pooled, "--pooled");
  if (enc_spec.kind == EncoderSpec::Kind::external)
    for (int layer : o.layers)
      if (layer > 0 && (!hidden_paths.count(layer) || !pooled_paths.count(layer)))
        throw UsageError("external encoder: layer " + std::to_string(layer) + " needs --hidden and --pooled");

  LoadedTokenizer lt = load_tokenizer(o.tokenizer);
  for (const auto& f : lt.files) ctx.manifest.add_input(f);
  const TokenizerHandle& tok = lt.handle;
  LoadedMatrix v0 = load_v0(o.v0, tok.vocab_size());
  for (const auto& f : v0.files) ctx.manifest.add_input(f);
  ctx.manifest.add_input(o.corpus);
  const Corpus corpus = load_corpus(o.corpus);
  const std::set<char32_t> chars = select_oov_chars(corpus, tok);
  ctx.out << chars.size() << " characters need two or more tokens\n";

  if (!o.emit_chars.empty()) {
    json j = json::array();
    for (char32_t c : chars) j.push_back({{"codepoint", static_cast<std::uint32_t>(c)}, {"char", encode_utf8(c)},
                                          {"constituents", tok.encode(encode_utf8(c))}});
    ensure_parent(o.emit_chars);
    write_file(o.emit_chars, j.dump(2) + "\n");
  }

  std::unique_ptr<LayerEncoder> enc;
  if (enc_spec.kind != EncoderSpec::Kind::external) enc = make_encoder(enc_spec, v0.matrix.dim());
  const IdentityEncoder identity(v0.matrix.dim());
  std::map<int, HiddenMatrix> references;
  std::map<int, EmbeddingMatrix> pooled;
  const auto reference = [&](int layer) -> const HiddenMatrix& {
    auto it = references.find(layer);
    if (it != references.end()) return it->second;
    HiddenMatrix vl;
    if (enc) {
      vl = build_reference(*enc, v0.matrix, layer, ctx.par);
    } else if (layer == 0) {
      vl = {0, v0.matrix};
    } else {
      const std::string& path = hidden_paths.at(layer);
      ctx.manifest.add_input(path);
      vl = {layer, load_matrix(path)};
      if (vl.rows.n_tokens() != v0.matrix.n_tokens())
        throw InvalidArgument(path + ": " + std::to_string(vl.rows.n_tokens()) + " rows, V0 has " +
                              std::to_string(v0.matrix.n_tokens()));
      const std::string& ppath = pooled_paths.at(layer);
      ctx.manifest.add_input(ppath);
      EmbeddingMatrix p = load_matrix(ppath);
      if (p.n_tokens() != chars.size() || p.dim() != vl.rows.dim())
        throw InvalidArgument(ppath + ": expected " + std::to_string(chars.size()) + " x " +
                              std::to_string(vl.rows.dim()) + " pooled vectors");
      pooled.emplace(layer, std::move(p));
    }
    return references.emplace(layer, std::move(vl)).first->second;
  };
  std::map<char32_t, std::size_t> char_row;
  for (char32_t c : chars) char_row.emplace(c, char_row.size());

  std::vector<AugmentationPlan> plans;
  for (const DerivationStrategy& s : cells) {
    const HiddenMatrix& vl = reference(s.layer);
    PooledQuery query = [&, layer = s.layer](char32_t c, std::span<const TokenId> ids) -> Vector {
      if (enc) return pooled_hidden(*enc, v0.matrix.gather(ids), layer);
      if (layer == 0) return pooled_hidden(identity, v0.matrix.gather(ids), 0);
      return pooled.at(layer).row(char_row.at(c));
    };
    AugmentationPlan plan = augment_from_reference(tok, v0.matrix, vl, chars, s, query, ctx.par);
    plan.metadata["encoder"] = enc ? enc->describe() : "external";
    plan.metadata["encoder_spec"] = o.encoder;
    plan.metadata["tokenizer_spec"] = o.tokenizer;
    plan.metadata["v0_spec"] = o.v0;
    plan.metadata["unicode_version"] = std::string(unicode_version());
    plan.new_token_fraction[fs::path(o.corpus).stem().string()] = fraction_new_tokens(corpus, tok, plan);
    plans.push_back(std::move(plan));
  }
  const std::string digest = ctx.manifest.digest();
  for (auto& p : plans) p.metadata["manifest_sha256"] = digest;

  const fs::path out = o.out;
  if (plans.size() == 1 && !fs::is_directory(out)) {
    ensure_parent(out);
    save_plan(out, plans[0]);
    ctx.manifest.outputs = {out.string()};
  } else {
    fs::create_directories(out);
    for (const auto& p : plans) {
      const fs::path file = out / ("plan_l" + std::to_string(p.strategy.layer) + "_" + file_label(p.strategy) + ".json");
      save_plan(file, p);
      ctx.manifest.outputs.push_back(file.string());
    }
  }
  write_manifest(ctx.manifest, out);
  ctx.out << "wrote " << plans.size() << " plan" << (plans.size() == 1 ? "" : "s") << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::vector<std::string> plans;
  std::vector<std::string> corpora;
  std::string tokenizer;
  std::string v0;
  std::string encoder;
  std::optional<int> last_layer;
  bool report_new_fraction = false;
  std::string out;
};

void add_eval(CLI::App& app, EvalOptions& o) {
  auto* c = app.add_subcommand("eval", "Hidden-state similarity of augmented versus original tokenizations");
  c->add_option("--plan", o.plans, "Plan file, repeatable; one output row each")->required();
  c->add_option("--corpus", o.corpora, "LANG=PATH evaluation corpus, repeatable")->required();
  c->add_option("--tokenizer", o.tokenizer, "Override the tokenizer recorded in the plan");
  c->add_option("--v0", o.v0, "Override the V0 spec recorded in the plan");
  c->add_option("--encoder", o.encoder, "Override the encoder recorded in the plan (toy or identity)");
  c->add_option("--last-layer", o.last_layer, "Layer whose mean hidden state is compared (default: encoder depth)");
  c->add_flag("--report-new-fraction", o.report_new_fraction, "Add the share of new tokens per corpus");
  c->add_option("--out", o.out, "Output CSV")->required();
}

std::string recorded(const AugmentationPlan& p, const std::string& override, const char* key, const std::string& file) {
  if (!override.empty()) return override;
  const auto it = p.metadata.find(key);
  if (it == p.metadata.end() || it->second.empty())
    throw UsageError(file + " records no " + key + "; pass it explicitly");
  return it->second;
}

int run_eval(const EvalOptions& o, Context& ctx) {
  std::vector<std::pair<std::string, std::string>> corpus_specs;
  for (const auto& c : o.corpora) corpus_specs.push_back(split_assignment(c, "--corpus"));
  if (o.last_layer && *o.last_layer < 0) throw UsageError("--last-layer must be non-negative");

  std::vector<std::pair<std::string, Corpus>> corpora;
  for (const auto& [lang, path] : corpus_specs) {
    ctx.manifest.add_input(path);
    corpora.emplace_back(lang, load_corpus(path));
  }

  std::map<std::string, LoadedTokenizer> toks;
  std::map<std::string, EmbeddingMatrix> v0s;
  std::map<std::string, std::unique_ptr<LayerEncoder>> encoders;

  std::string header = "layer,strategy,k,mean";
  for (const auto& [lang, c] : corpora) header += "," + csv_field(lang);
  if (o.report_new_fraction)
    for (const auto& [lang, c] : corpora) header += "," + csv_field("new_tokens_" + lang);
  std::string body = header + "\n";

  for (const auto& plan_path : o.plans) {
    ctx.manifest.add_input(plan_path);
    const AugmentationPlan plan = load_plan(plan_path);
    const std::string tok_spec = recorded(plan, o.tokenizer, "tokenizer_spec", plan_path);
    const std::string v0_spec = recorded(plan, o.v0, "v0_spec", plan_path);
    const std::string enc_text = recorded(plan, o.encoder, "encoder_spec", plan_path);

    auto tit = toks.find(tok_spec);
    if (tit == toks.end()) {
      tit = toks.emplace(tok_spec, load_tokenizer(tok_spec)).first;
      for (const auto& f : tit->second.files) ctx.manifest.add_input(f);
    }
    const TokenizerHandle& tok = tit->second.handle;
    const std::string v0_key = v0_spec + "#" + std::to_string(tok.vocab_size());
    auto vit = v0s.find(v0_key);
    if (vit == v0s.end()) {
      LoadedMatrix lm = load_v0(v0_spec, tok.vocab_size());
      for (const auto& f : lm.files) ctx.manifest.add_input(f);
      vit = v0s.emplace(v0_key, std::move(lm.matrix)).first;
    }
    const EmbeddingMatrix& v0 = vit->second;
    if (plan.base_vocab_size != v0.n_tokens() || plan.dim != v0.dim())
      throw InvalidArgument(plan_path + ": plan expects V0 of " + std::to_string(plan.base_vocab_size) + " x " +
                            std::to_string(plan.dim) + ", got " + std::to_string(v0.n_tokens()) + " x " +
                            std::to_string(v0.dim()));
    const std::string enc_key = enc_text + "#" + std::to_string(v0.dim());
    auto eit = encoders.find(enc_key);
    if (eit == encoders.end()) eit = encoders.emplace(enc_key, make_encoder(parse_encoder(enc_text), v0.dim())).first;
    const LayerEncoder& enc = *eit->second;
    const int last = o.last_layer.value_or(enc.depth());
    if (last > enc.depth())
      throw UsageError("--last-layer " + std::to_string(last) + " exceeds encoder depth " + std::to_string(enc.depth()));

    std::vector<double> means;
    for (const auto& [lang, c] : corpora) means.push_back(corpus_similarity(enc, c, tok, v0, plan, last, ctx.par).mean);
    double total = 0.0;
    for (double m : means) total += m;
    const DerivationStrategy& s = plan.strategy;
    body += std::to_string(s.layer) + "," + std::string(strategy_kind_name(s.kind)) + "," +
            (s.kind == StrategyKind::linreg ? std::string() : std::to_string(s.k)) + "," +
            format_double(means.empty() ? 0.0 : total / static_cast<double>(means.size()));
    for (double m : means) body += "," + format_double(m);
    if (o.report_new_fraction)
      for (const auto& [lang, c] : corpora) body += "," + format_double(fraction_new_tokens(c, tok, plan));
    body += "\n";
  }
  ensure_parent(o.out);
  write_file(o.out, manifest_comment(ctx.manifest) + body);
  ctx.manifest.outputs = {o.out};
  write_manifest(ctx.manifest, o.out);
  return kExitOk;
}

// --------------------------------------------------------------------------

unsigned resolve_threads(const std::optional<unsigned>& flag) {
  if (flag) {
    if (*flag == 0) throw UsageError("--threads must be at least 1");
    return *flag;
  }
  if (const char* env = std::getenv("TOKENLENS_THREADS"); env && *env) {
    const auto n = parse_u64(env, "TOKENLENS_THREADS");
    if (n == 0 || n > 4096) throw UsageError("TOKENLENS_THREADS must be between 1 and 4096");
    return static_cast<unsigned>(n);
  }
  return 1;
}

void record_flags(const CLI::App& sub, RunManifest& m) {
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (kUnrecordedFlags.count(name)) continue;
    if (opt->count() > 0) {
      m.flags[name] = opt->results();
    } else if (!opt->get_default_str().empty()) {
      m.flags[name] = {opt->get_default_str()};
    }
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tokenizer vocabulary, tokenization premium and embedding augmentation analyses", "tokenlens"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::optional<unsigned> threads;

  TrainOptions train;
  CompareOptions compare;
  PremiumOptions premium_opts;
  AugmentOptions augment_opts;
  EvalOptions eval;
  add_train(app, train);
  add_compare(app, compare);
  add_premium(app, premium_opts);
  add_augment(app, augment_opts);
  add_eval(app, eval);
  for (CLI::App* sub : app.get_subcommands({}))
    sub->add_option("--threads", threads, "Worker threads (default: $TOKENLENS_THREADS, else 1)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    Context ctx{RunManifest{}, Parallelism{resolve_threads(threads)}, out};
    ctx.manifest.command = sub->get_name();
    ctx.manifest.threads = ctx.par.threads;
    ctx.manifest.timestamp = utc_timestamp();
    record_flags(*sub, ctx.manifest);
    const std::string& name = sub->get_name();
    if (name == "train") return run_train(train, ctx);
    if (name == "compare") return run_compare(compare, ctx);
    if (name == "premium") return run_premium(premium_opts, ctx);
    if (name == "augment") return run_augment(augment_opts, ctx);
    return run_eval(eval, ctx);
  } catch (const UsageError& e) {
    err << "tokenlens " << sub->get_name() << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "tokenlens " << sub->get_name() << ": error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace tokenlens::cli
