#include "tokenlens/vocab_analysis.hpp"

#include <random>
#include <set>

#include "test_util.hpp"
#include "tokenlens/error.hpp"

namespace tokenlens {
namespace {

Vocabulary vocab(std::vector<std::string> t) { return Vocabulary(std::move(t)); }

TEST(NormalizeTest, DefaultRules) {
  const NormalizationRules r = NormalizationRules::defaults();
  EXPECT_EQ(normalize_token("\xC4\xA0hello", r), " hello");
  EXPECT_EQ(normalize_token("\xE2\x96\x81hello", r), " hello");
  EXPECT_EQ(normalize_token("##ing", r), "ing");
  EXPECT_EQ(normalize_token("cat", r), "cat");
  EXPECT_EQ(normalize_token("cat", NormalizationRules::none()), "cat");
}

TEST(NormalizeTest, CollapsesDuplicatesAndDropsEmpty) {
  const NormalizedVocab n = normalize_vocab(vocab({"\xC4\xA0the", "\xE2\x96\x81the", "##", "the", "##the"}),
                                            NormalizationRules::defaults());
  EXPECT_EQ(n.vocab.tokens(), (std::vector<std::string>{" the", "the"}));
  EXPECT_EQ(n.collapsed, 2u);
  EXPECT_EQ(n.dropped_empty, 1u);
}

TEST(NormalizeTest, RejectsNonIdempotentRules) {
  NormalizationRules r;
  r.prefix_markers = {{"x", "xx"}};
  EXPECT_THROW(r.validate(), InvalidArgument);
  NormalizationRules empty_marker;
  empty_marker.prefix_markers = {{"", " "}};
  EXPECT_THROW(empty_marker.validate(), InvalidArgument);
}

TEST(NormalizeTest, Idempotent) {
  std::mt19937_64 rng(41);
  const std::vector<std::string> pieces = {"\xC4\xA0", "\xE2\x96\x81", "##", "#", "a", "b", " "};
  const NormalizationRules r = NormalizationRules::defaults();
  for (int trial = 0; trial < 300; ++trial) {
    const std::string t = testing::random_string(rng, pieces, static_cast<std::size_t>(trial % 6 + 1));
    const std::string once = normalize_token(t, r);
    ASSERT_EQ(normalize_token(once, r), once) << t;
  }
}

TEST(JaccardTest, Examples) {
  EXPECT_EQ(jaccard(vocab({"a", "b"}), vocab({"a", "b"})), 1.0);
  EXPECT_EQ(jaccard(vocab({"a", "b"}), vocab({"c", "d"})), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(vocab({"a", "b"}), vocab({"b", "c"})), 1.0 / 3.0);
  EXPECT_THROW(jaccard(vocab({}), vocab({})), InvalidArgument);
  EXPECT_EQ(jaccard(vocab({"a"}), vocab({})), 0.0);
}

TEST(ContainmentTest, Examples) {
  EXPECT_EQ(containment(vocab({"a"}), vocab({"a", "b"})), 1.0);
  EXPECT_EQ(containment(vocab({"a", "c"}), vocab({"a", "b"})), 0.5);
  EXPECT_EQ(containment(vocab({"x", "y"}), vocab({"x", "y"})), 1.0);
  EXPECT_THROW(containment(vocab({}), vocab({"a"})), InvalidArgument);
}

TEST(BreakdownTest, HandCountedRow) {
  const VocabBreakdownRow r = vocab_breakdown(vocab({"a", "\xC3\xA9", "ab"}));
  EXPECT_EQ(r.clean_vocab_size, 3u);
  EXPECT_EQ(r.tokens_by_byte_len[0], 1u);
  EXPECT_EQ(r.tokens_by_byte_len[1], 2u);
  EXPECT_EQ(r.chars_by_byte_len[0], 2u);
  EXPECT_EQ(r.chars_by_byte_len[1], 1u);
  EXPECT_EQ(r.distinct_blocks, 2u);
}

TEST(BreakdownTest, EmptyVocabulary) {
  const VocabBreakdownRow r = vocab_breakdown(vocab({}));
  EXPECT_EQ(r.clean_vocab_size, 0u);
  EXPECT_EQ(r.distinct_blocks, 0u);
  for (auto n : r.tokens_by_byte_len) EXPECT_EQ(n, 0u);
  for (auto n : r.chars_by_byte_len) EXPECT_EQ(n, 0u);
}

TEST(BreakdownTest, LoneLeadByteCountsAsTokenOnly) {
  const VocabBreakdownRow r = vocab_breakdown(vocab({"\xC3"}));
  EXPECT_EQ(r.tokens_by_byte_len[0], 1u);
  for (auto n : r.chars_by_byte_len) EXPECT_EQ(n, 0u);
  EXPECT_EQ(r.distinct_blocks, 0u);
}

TEST(BreakdownTest, LongTokensBucketAboveSeven) {
  const VocabBreakdownRow r = vocab_breakdown(vocab({"abcdefg", "abcdefgh", "\xE0\xA4\x95\xE0\xA4\x96\xE0\xA4\x97"}));
  EXPECT_EQ(r.tokens_by_byte_len[6], 1u);
  EXPECT_EQ(r.tokens_by_byte_len[7], 2u);
  EXPECT_EQ(r.chars_by_byte_len[2], 3u);
}

TEST(BreakdownTest, HistogramSumsToSize) {
  std::mt19937_64 rng(43);
  const std::vector<std::string> pieces = {"a", "\xC3\xA9", "\xE0\xA4\x95", "\xF0\x9F\x98\x80", "\xC3", "\xA9"};
  for (int trial = 0; trial < 50; ++trial) {
    std::set<std::string> tokens;
    while (tokens.size() < 30) tokens.insert(testing::random_string(rng, pieces, 2 + rng() % 4));
    const VocabBreakdownRow r = vocab_breakdown(vocab({tokens.begin(), tokens.end()}));
    std::size_t sum = 0;
    for (auto n : r.tokens_by_byte_len) sum += n;
    ASSERT_EQ(sum, r.clean_vocab_size);
    ASSERT_EQ(r.clean_vocab_size, tokens.size());
  }
}

TEST(ComparisonMatrixTest, IdenticalAndDisjoint) {
  const std::vector<NamedVocab> same{{"x", vocab({"a", "b"})}, {"y", vocab({"a", "b"})}};
  const ComparisonMatrix m = comparison_matrix(same, Metric::jaccard);
  EXPECT_EQ(m.values, (std::vector<std::vector<double>>{{1, 1}, {1, 1}}));
  const std::vector<NamedVocab> disjoint{{"x", vocab({"a"})}, {"y", vocab({"b"})}};
  EXPECT_EQ(comparison_matrix(disjoint, Metric::jaccard).values[0][1], 0.0);
}

TEST(ComparisonMatrixTest, ContainmentUsesTheSmallerVocabulary) {
  const std::vector<NamedVocab> v{{"big", vocab({"a", "b", "c", "d"})}, {"small", vocab({"a", "z"})}};
  const ComparisonMatrix m = comparison_matrix(v, Metric::containment);
  EXPECT_EQ(m.values[0][1], 0.5);
  EXPECT_EQ(m.values[1][0], 0.5);
  EXPECT_EQ(m.values[0][0], 1.0);
}

TEST(ComparisonMatrixTest, Errors) {
  const std::vector<NamedVocab> one{{"x", vocab({"a"})}};
  EXPECT_THROW(comparison_matrix(one, Metric::jaccard), InvalidArgument);
  const std::vector<NamedVocab> with_empty{{"x", vocab({"a"})}, {"y", vocab({})}};
  EXPECT_THROW(comparison_matrix(with_empty, Metric::jaccard), InvalidArgument);
}

TEST(ComparisonMatrixTest, CsvLayout) {
  const std::vector<NamedVocab> v{{"p", vocab({"a", "b"})}, {"q,r", vocab({"b", "c"})}};
  EXPECT_EQ(comparison_csv(comparison_matrix(v, Metric::jaccard)),
            "jaccard,p,\"q,r\"\np,1,0.3333333333333333\n\"q,r\",0.3333333333333333,1\n");
}

TEST(ComparisonMatrixTest, ParallelMatchesSequential) {
  std::mt19937_64 rng(47);
  std::vector<NamedVocab> v;
  for (int i = 0; i < 6; ++i) {
    std::set<std::string> s;
    while (s.size() < 50) s.insert(testing::random_string(rng, {"a", "b", "c"}, 4));
    v.push_back({"v" + std::to_string(i), vocab({s.begin(), s.end()})});
  }
  EXPECT_EQ(comparison_csv(comparison_matrix(v, Metric::jaccard, {1})),
            comparison_csv(comparison_matrix(v, Metric::jaccard, {5})));
}

TEST(BreakdownTest, TsvColumnOrder) {
  const std::vector<NamedBreakdown> rows{{"tok", vocab_breakdown(vocab({"a", "\xC3\xA9", "ab"}))}};
  const std::string tsv = breakdown_tsv(rows);
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')),
            "tokenizer\tclean_vocab_size\tdistinct_unicode_blocks\t1_byte_chars\t2_byte_chars\t3_byte_chars\t"
            "4_byte_chars\t1_byte_toks\t2_byte_toks\t3_byte_toks\t4_byte_toks\t5_byte_toks\t6_byte_toks\t"
            "7_byte_toks\tgt7_byte_toks");
  EXPECT_EQ(tsv.substr(tsv.find('\n') + 1), "tok\t3\t2\t2\t1\t0\t0\t1\t2\t0\t0\t0\t0\t0\t0\n");
}

TEST(MetricTest, Parse) {
  EXPECT_EQ(parse_metric("jaccard"), Metric::jaccard);
  EXPECT_EQ(parse_metric("containment"), Metric::containment);
  EXPECT_THROW(parse_metric("cosine"), InvalidArgument);
}

}  // namespace
}  // namespace tokenlens
