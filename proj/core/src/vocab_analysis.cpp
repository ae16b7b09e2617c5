#include "tokenlens/vocab_analysis.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "tokenlens/format.hpp"
#include "tokenlens/error.hpp"
#include "tokenlens/text.hpp"

namespace tokenlens {

namespace {

std::size_t intersection_size(const Vocabulary& a, const Vocabulary& b) {
  const Vocabulary& small = a.size() <= b.size() ? a : b;
  const Vocabulary& large = a.size() <= b.size() ? b : a;
  std::size_t n = 0;
  for (const auto& t : small.tokens()) n += large.contains(t);
  return n;
}

bool starts_with_any(std::string_view s, const std::vector<std::string>& markers) {
  return std::any_of(markers.begin(), markers.end(),
                     [&](const std::string& m) { return !m.empty() && s.starts_with(m); });
}

}  // namespace

NormalizationRules NormalizationRules::defaults() {
  NormalizationRules r;
  r.prefix_markers = {{"\xC4\xA0", " "}, {"\xE2\x96\x81", " "}};  // Ġ, ▁
  r.strip_continuation = {"##"};
  return r;
}

void NormalizationRules::validate() const {
  for (const auto& [marker, replacement] : prefix_markers) {
    if (marker.empty()) throw InvalidArgument("empty prefix marker");
    for (const auto& [other, unused] : prefix_markers)
      if (replacement.find(other) != std::string::npos)
        throw InvalidArgument("replacement for \"" + marker + "\" contains marker \"" + other + "\"");
    if (starts_with_any(replacement, strip_continuation))
      throw InvalidArgument("replacement for \"" + marker + "\" starts with a continuation marker");
  }
  for (const auto& c : strip_continuation)
    if (c.empty()) throw InvalidArgument("empty continuation marker");
}

std::string normalize_token(std::string_view token, const NormalizationRules& rules) {
  std::string_view rest = token;
  for (bool stripped = true; stripped;) {
    stripped = false;
    for (const auto& c : rules.strip_continuation)
      if (!c.empty() && rest.starts_with(c)) {
        rest.remove_prefix(c.size());
        stripped = true;
      }
  }
  std::string out(rest);
  for (const auto& [marker, replacement] : rules.prefix_markers) {
    if (marker.empty()) continue;
    std::string next;
    std::size_t pos = 0;
    for (std::size_t hit; (hit = out.find(marker, pos)) != std::string::npos; pos = hit + marker.size())
      next.append(out, pos, hit - pos).append(replacement);
    next.append(out, pos);
    out = std::move(next);
  }
  return out;
}

NormalizedVocab normalize_vocab(const Vocabulary& raw, const NormalizationRules& rules) {
  rules.validate();
  NormalizedVocab out;
  for (const auto& t : raw.tokens()) {
    std::string n = normalize_token(t, rules);
    if (n.empty()) {
      ++out.dropped_empty;
    } else if (out.vocab.contains(n)) {
      ++out.collapsed;
    } else {
      out.vocab.add(std::move(n));
    }
  }
  return out;
}

double jaccard(const Vocabulary& a, const Vocabulary& b) {
  if (a.empty() && b.empty()) throw InvalidArgument("Jaccard similarity of two empty vocabularies");
  const std::size_t inter = intersection_size(a, b);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

double containment(const Vocabulary& small, const Vocabulary& large) {
  if (small.empty()) throw InvalidArgument("containment of an empty vocabulary");
  return static_cast<double>(intersection_size(small, large)) / static_cast<double>(small.size());
}

VocabBreakdownRow vocab_breakdown(const Vocabulary& vocab) {
  VocabBreakdownRow row;
  row.clean_vocab_size = vocab.size();
  std::set<char32_t> chars;
  for (const auto& t : vocab.tokens()) {
    ++row.tokens_by_byte_len[std::min<std::size_t>(t.size(), 8) - 1];
    const std::set<char32_t> found = recover_utf8_chars(t);
    chars.insert(found.begin(), found.end());
  }
  std::set<std::string_view> blocks;
  for (char32_t c : chars) {
    ++row.chars_by_byte_len[char_byte_len(c) - 1];
    blocks.insert(unicode_block(c));
  }
  row.distinct_blocks = blocks.size();
  return row;
}

std::string_view metric_name(Metric m) {
  return m == Metric::jaccard ? "jaccard" : "containment";
}

Metric parse_metric(std::string_view name) {
  if (name == "jaccard") return Metric::jaccard;
  if (name == "containment") return Metric::containment;
  throw InvalidArgument("unknown metric \"" + std::string(name) + "\"");
}

ComparisonMatrix comparison_matrix(std::span<const NamedVocab> vocabs, Metric metric,
                                   Parallelism par) {
  if (vocabs.size() < 2) throw InvalidArgument("need at least 2 vocabularies to compare");
  for (const auto& v : vocabs)
    if (v.vocab.empty()) throw InvalidArgument("vocabulary \"" + v.name + "\" is empty");
  const std::size_t n = vocabs.size();
  ComparisonMatrix m;
  m.metric = metric;
  for (const auto& v : vocabs) m.labels.push_back(v.name);
  m.values.assign(n, std::vector<double>(n, 1.0));
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) cells.emplace_back(i, j);
  parallel_for(cells.size(), par, [&](std::size_t c) {
    const auto [i, j] = cells[c];
    const Vocabulary& a = vocabs[i].vocab;
    const Vocabulary& b = vocabs[j].vocab;
    double v;
    if (metric == Metric::jaccard)
      v = jaccard(a, b);
    else
      v = a.size() <= b.size() ? containment(a, b) : containment(b, a);
    m.values[i][j] = v;
    m.values[j][i] = v;
  });
  return m;
}

std::string comparison_csv(const ComparisonMatrix& m) {
  std::string out = csv_field(metric_name(m.metric));
  for (const auto& l : m.labels) out += "," + csv_field(l);
  out += "\n";
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    out += csv_field(m.labels[i]);
    for (double v : m.values[i]) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

std::string breakdown_tsv(std::span<const NamedBreakdown> rows) {
  std::string out =
      "tokenizer\tclean_vocab_size\tdistinct_unicode_blocks"
      "\t1_byte_chars\t2_byte_chars\t3_byte_chars\t4_byte_chars"
      "\t1_byte_toks\t2_byte_toks\t3_byte_toks\t4_byte_toks\t5_byte_toks\t6_byte_toks"
      "\t7_byte_toks\tgt7_byte_toks\n";
  for (const auto& [name, r] : rows) {
    out += name + "\t" + std::to_string(r.clean_vocab_size) + "\t" + std::to_string(r.distinct_blocks);
    for (auto c : r.chars_by_byte_len) out += "\t" + std::to_string(c);
    for (auto c : r.tokens_by_byte_len) out += "\t" + std::to_string(c);
    out += "\n";
  }
  return out;
}

}  // namespace tokenlens
