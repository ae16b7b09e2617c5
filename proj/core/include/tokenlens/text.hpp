#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tokenlens {

// ---------------------------------------------------------------------------
// UTF-8 primitives. Validation is strict: overlong forms, surrogates and
// scalars above U+10FFFF are rejected.
// ---------------------------------------------------------------------------

// Byte offset of the first invalid sequence, or nullopt when `bytes` is valid.
std::optional<std::size_t> find_invalid_utf8(std::string_view bytes);

inline bool is_valid_utf8(std::string_view bytes) { return !find_invalid_utf8(bytes).has_value(); }

// Decodes valid UTF-8. Throws EncodingError with the offending offset.
std::u32string decode_utf8(std::string_view bytes);

std::string encode_utf8(char32_t ch);
std::string encode_utf8(std::u32string_view text);

// Splits valid UTF-8 into one string per scalar.
std::vector<std::string> split_utf8_chars(std::string_view text);

// UTF-8 encoded length of a scalar, 1..4.
int char_byte_len(char32_t ch);

bool is_unicode_scalar(char32_t ch) noexcept;

// Characters of the longest valid UTF-8 region of `bytes`, for recovering
// characters from byte-level vocabularies that split multi-byte sequences.
// Valid input is returned whole. Otherwise up to three bytes may be dropped
// from each end and at least two bytes must remain; ties prefer the region
// that starts earliest. Returns an empty set when nothing qualifies.
std::set<char32_t> recover_utf8_chars(std::string_view bytes);

// ---------------------------------------------------------------------------
// Unicode blocks
// ---------------------------------------------------------------------------

// Block name from the embedded UCD block table, or "No_Block".
std::string_view unicode_block(char32_t ch);

// Version of the UCD Blocks.txt the table was generated from.
std::string_view unicode_version();

// ---------------------------------------------------------------------------
// Corpora
// ---------------------------------------------------------------------------

struct Corpus {
  std::vector<std::string> documents;

  std::size_t size() const noexcept { return documents.size(); }
  bool empty() const noexcept { return documents.empty(); }
};

struct SentencePair {
  std::string english;
  std::string target;
};

struct ParallelCorpus {
  std::vector<SentencePair> pairs;
  std::string target_lang;    // ISO-639-3, e.g. "hin"
  std::string target_script;  // ISO-15924, e.g. "Deva"
  std::size_t n_skipped = 0;  // pairs dropped at ingestion

  std::string label() const { return target_lang + " (" + target_script + ")"; }
};

// Reads a whole file, validating UTF-8. Throws IoError / EncodingError.
std::string read_utf8_file(const std::filesystem::path& path);

// Splits on '\n'. A trailing newline does not start a new line; a trailing
// '\r' is stripped from each line.
std::vector<std::string> split_lines(std::string_view text);

// One document per non-empty line.
Corpus load_corpus(const std::filesystem::path& path);

// Line i of each file forms pair i. Pairs with an empty side are skipped and
// counted in n_skipped. Throws InvalidArgument when line counts differ.
ParallelCorpus load_parallel_corpus(const std::filesystem::path& english_path,
                                    const std::filesystem::path& target_path, std::string lang,
                                    std::string script);

// Same pairing rules over in-memory lines.
ParallelCorpus make_parallel_corpus(const std::vector<std::string>& english,
                                    const std::vector<std::string>& target, std::string lang,
                                    std::string script);

}  // namespace tokenlens
