#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tokenlens/augmentation.hpp"
#include "tokenlens/embedding.hpp"
#include "tokenlens/unigram.hpp"
#include "tokenlens/vocabulary.hpp"

namespace tokenlens {

// ---------------------------------------------------------------------------
// Vocabulary and merge files
//
// Vocabulary: a JSON object mapping token -> id (ids must be dense 0..n-1),
// or plain text with one token per line (id = line index). Merges: a JSON
// array of [left, right] string pairs, or GPT-2 style "left right" lines
// (a leading "#version" line is skipped).
// ---------------------------------------------------------------------------

Vocabulary load_vocab(const std::filesystem::path& path);
Vocabulary parse_vocab(std::string_view text);

MergeRuleList load_merges(const std::filesystem::path& path, const Vocabulary& vocab);
MergeRuleList parse_merges(std::string_view text, const Vocabulary& vocab);

std::string vocab_json(const Vocabulary& vocab);
std::string merges_json(const MergeRuleList& merges, const Vocabulary& vocab);

// {"type": "Unigram", "vocab": [[token, log_prob], ...]}
std::string unigram_json(const UnigramVocab& vocab);
UnigramVocab load_unigram(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Matrix files: little-endian u32 n_tokens, u32 dim, then n_tokens * dim
// little-endian f32 values, row-major. An optional sidecar "<path>.json"
// carries the layer and provenance.
// ---------------------------------------------------------------------------

struct MatrixSidecar {
  int layer = 0;
  std::string provenance;
};

void save_matrix(const std::filesystem::path& path, const EmbeddingMatrix& m);
EmbeddingMatrix load_matrix(const std::filesystem::path& path);
std::string encode_matrix(const EmbeddingMatrix& m);
EmbeddingMatrix decode_matrix(std::string_view bytes);

std::filesystem::path sidecar_path(const std::filesystem::path& matrix_path);
void save_sidecar(const std::filesystem::path& matrix_path, const MatrixSidecar& meta);
MatrixSidecar load_sidecar(const std::filesystem::path& matrix_path);

// ---------------------------------------------------------------------------
// Augmentation plans: JSON with per-entry base64 (little-endian f32)
// embeddings, plus a companion matrix file "<plan stem>.bin" holding the same
// vectors in entry order.
// ---------------------------------------------------------------------------

std::string plan_json(const AugmentationPlan& plan, const std::string& companion_name);
AugmentationPlan parse_plan(std::string_view json);
void save_plan(const std::filesystem::path& path, const AugmentationPlan& plan);
AugmentationPlan load_plan(const std::filesystem::path& path);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Throws IoError on failure.
void write_file(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace tokenlens
