#pragma once

// Parsing of the compact tokenizer / matrix / encoder specs accepted on the
// command line.

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tokenlens/embedding.hpp"
#include "tokenlens/tokenizer.hpp"

namespace tokenlens::cli {

// Bad flag values; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(std::string_view s, char sep);

// "name=value" -> {name, value}; throws UsageError without '='.
std::pair<std::string, std::string> split_assignment(std::string_view s, std::string_view flag);

struct LoadedTokenizer {
  TokenizerHandle handle;
  std::vector<std::filesystem::path> files;
};

// [name=]kind:file[:file]
//   bpe:vocab[:merges]        character-level merge tokenizer
//   bpe-bytes:vocab[:merges]  byte-level (GPT-2 style) merge tokenizer
//   ulm:unigram.json          unigram tokenizer
// The name defaults to the kind.
LoadedTokenizer load_tokenizer(std::string_view spec);

// Matrix file path, or random:SEED:DIM for a seeded Gaussian matrix with
// `n_tokens` rows.
struct LoadedMatrix {
  EmbeddingMatrix matrix;
  std::vector<std::filesystem::path> files;
};
LoadedMatrix load_v0(std::string_view spec, std::size_t n_tokens);

// toy:SEED:DEPTH[:linear], identity, or external.
struct EncoderSpec {
  enum class Kind { toy, identity, external } kind = Kind::toy;
  std::uint64_t seed = 0;
  int depth = 1;
  bool linear = false;
};
EncoderSpec parse_encoder(std::string_view spec);

// Runnable encoder for `spec`; throws UsageError for external encoders.
std::unique_ptr<LayerEncoder> make_encoder(const EncoderSpec& spec, std::size_t dim);

std::uint64_t parse_u64(std::string_view s, std::string_view what);
int parse_int(std::string_view s, std::string_view what);

}  // namespace tokenlens::cli
