#include "tokenlens/premium.hpp"

#include <nlohmann/json.hpp>

#include "tokenlens/format.hpp"
#include "tokenlens/error.hpp"

namespace tokenlens {

double sentence_ratio(const TokenizerHandle& tok, std::string_view target, std::string_view english) {
  const std::size_t eng = tok.encode(english).size();
  if (eng == 0) throw InvalidArgument("English sentence encodes to zero tokens");
  return static_cast<double>(tok.encode(target).size()) / static_cast<double>(eng);
}

PremiumReport premium(const TokenizerHandle& tok, const ParallelCorpus& pc, Parallelism par) {
  struct Counts {
    std::size_t english = 0;
    std::size_t target = 0;
  };
  std::vector<Counts> counts(pc.pairs.size());
  parallel_for(pc.pairs.size(), par, [&](std::size_t i) {
    counts[i].english = tok.encode(pc.pairs[i].english).size();
    if (counts[i].english > 0) counts[i].target = tok.encode(pc.pairs[i].target).size();
  });

  PremiumReport r;
  r.lang = pc.target_lang;
  r.script = pc.target_script;
  r.n_skipped = pc.n_skipped;
  double sum = 0.0;
  std::size_t eng_total = 0;
  std::size_t tgt_total = 0;
  for (const Counts& c : counts) {
    if (c.english == 0) {
      ++r.n_skipped;
      continue;
    }
    const double ratio = static_cast<double>(c.target) / static_cast<double>(c.english);
    r.per_sentence_ratios.push_back(ratio);
    sum += ratio;
    eng_total += c.english;
    tgt_total += c.target;
  }
  r.n_pairs = r.per_sentence_ratios.size();
  if (r.n_pairs == 0)
    throw InvalidArgument("no usable sentence pairs for " + pc.label() + " (" +
                          std::to_string(r.n_skipped) + " skipped)");
  r.mean_ratio = sum / static_cast<double>(r.n_pairs);
  r.total_ratio = static_cast<double>(tgt_total) / static_cast<double>(eng_total);
  return r;
}

Aggregate parse_aggregate(std::string_view name) {
  if (name == "mean") return Aggregate::mean;
  if (name == "totals") return Aggregate::totals;
  throw InvalidArgument("unknown aggregate mode \"" + std::string(name) + "\"");
}

std::string_view aggregate_name(Aggregate a) { return a == Aggregate::mean ? "mean" : "totals"; }

std::optional<double> PremiumMatrix::value(std::size_t row, std::size_t col) const {
  const auto& rep = cells.at(row).at(col).report;
  if (!rep) return std::nullopt;
  return aggregate == Aggregate::mean ? rep->mean_ratio : rep->total_ratio;
}

PremiumMatrix premium_matrix(std::span<const TokenizerHandle> toks,
                             std::span<const ParallelCorpus> corpora, Aggregate aggregate,
                             Parallelism par) {
  if (toks.empty() || corpora.empty())
    throw InvalidArgument("premium matrix needs at least one tokenizer and one corpus");
  PremiumMatrix m;
  m.aggregate = aggregate;
  for (const auto& t : toks) m.tokenizers.push_back(t.name());
  for (const auto& c : corpora) m.languages.push_back(c.label());
  m.cells.assign(corpora.size(), std::vector<PremiumCell>(toks.size()));
  for (std::size_t r = 0; r < corpora.size(); ++r) {
    for (std::size_t c = 0; c < toks.size(); ++c) {
      try {
        m.cells[r][c].report = premium(toks[c], corpora[r], par);
      } catch (const std::exception& e) {
        m.cells[r][c].error = e.what();
      }
    }
  }
  return m;
}

std::string premium_csv(const PremiumMatrix& m) {
  std::string out = "language";
  for (const auto& t : m.tokenizers) out += "," + csv_field(t);
  out += "\n";
  for (std::size_t r = 0; r < m.languages.size(); ++r) {
    out += csv_field(m.languages[r]);
    for (std::size_t c = 0; c < m.tokenizers.size(); ++c) {
      const auto v = m.value(r, c);
      out += "," + (v ? format_fixed(*v, 2) : std::string("NA"));
    }
    out += "\n";
  }
  return out;
}

std::string premium_json(const PremiumMatrix& m, bool verbose) {
  nlohmann::json j;
  j["aggregate"] = aggregate_name(m.aggregate);
  j["special_tokens_excluded"] = true;
  j["tokenizers"] = m.tokenizers;
  j["languages"] = m.languages;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.languages.size(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.tokenizers.size(); ++c) {
      const PremiumCell& cell = m.cells[r][c];
      nlohmann::json jc;
      jc["tokenizer"] = m.tokenizers[c];
      if (cell.report) {
        const PremiumReport& rep = *cell.report;
        jc["lang"] = rep.lang;
        jc["script"] = rep.script;
        jc["mean_ratio"] = rep.mean_ratio;
        jc["total_ratio"] = rep.total_ratio;
        jc["n_pairs"] = rep.n_pairs;
        jc["n_skipped"] = rep.n_skipped;
        if (verbose) jc["per_sentence_ratios"] = rep.per_sentence_ratios;
      } else {
        jc["error"] = cell.error;
      }
      row.push_back(std::move(jc));
    }
    rows.push_back(std::move(row));
  }
  j["cells"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace tokenlens
