#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenlens/parallel.hpp"
#include "tokenlens/text.hpp"
#include "tokenlens/tokenizer.hpp"

namespace tokenlens {

// |encode(target)| / |encode(english)|. Throws InvalidArgument when the
// English side encodes to no tokens.
double sentence_ratio(const TokenizerHandle& tok, std::string_view target, std::string_view english);

struct PremiumReport {
  std::string lang;
  std::string script;
  double mean_ratio = 0.0;   // mean of per-sentence ratios
  double total_ratio = 0.0;  // total target tokens / total English tokens
  std::vector<double> per_sentence_ratios;
  std::size_t n_pairs = 0;
  std::size_t n_skipped = 0;  // ingestion skips plus pairs with zero English tokens
};

// Ratios are computed in parallel and reduced in pair order, so results do
// not depend on the thread count. Throws InvalidArgument when no pair is
// usable.
PremiumReport premium(const TokenizerHandle& tok, const ParallelCorpus& pc, Parallelism par = {});

enum class Aggregate { mean, totals };

Aggregate parse_aggregate(std::string_view name);
std::string_view aggregate_name(Aggregate a);

struct PremiumCell {
  std::optional<PremiumReport> report;
  std::string error;  // set when the cell is invalid
};

// Rows are languages, columns tokenizers, both in input order.
struct PremiumMatrix {
  Aggregate aggregate = Aggregate::mean;
  std::vector<std::string> tokenizers;
  std::vector<std::string> languages;  // "lang (Script)"
  std::vector<std::vector<PremiumCell>> cells;

  std::optional<double> value(std::size_t row, std::size_t col) const;
};

// A failing cell is recorded as invalid instead of aborting the table.
PremiumMatrix premium_matrix(std::span<const TokenizerHandle> toks,
                             std::span<const ParallelCorpus> corpora, Aggregate aggregate,
                             Parallelism par = {});

// Two-decimal cells, "NA" for invalid ones.
std::string premium_csv(const PremiumMatrix& m);

// Full-precision JSON; `verbose` adds the per-sentence ratio arrays.
std::string premium_json(const PremiumMatrix& m, bool verbose);

}  // namespace tokenlens
