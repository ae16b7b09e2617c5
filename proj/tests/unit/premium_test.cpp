#include "tokenlens/premium.hpp"

#include <memory>
#include <random>

#include <nlohmann/json.hpp>

#include "test_util.hpp"
#include "tokenlens/error.hpp"

namespace tokenlens {
namespace {

// One token per space-separated word.
TokenizerHandle word_tokenizer(std::string name = "words") {
  return TokenizerHandle(
      std::move(name),
      [](std::string_view s) {
        std::vector<TokenId> ids;
        bool in_word = false;
        for (char c : s) {
          if (c == ' ') {
            in_word = false;
          } else if (!in_word) {
            ids.push_back(0);
            in_word = true;
          }
        }
        return ids;
      },
      1);
}

// One token per byte.
TokenizerHandle byte_tokenizer() {
  return TokenizerHandle(
      "bytes",
      [](std::string_view s) {
        std::vector<TokenId> ids;
        for (unsigned char c : s) ids.push_back(c);
        return ids;
      },
      256);
}

TEST(SentenceRatioTest, Examples) {
  const TokenizerHandle tok = word_tokenizer();
  EXPECT_EQ(sentence_ratio(tok, "a b c d", "x y"), 2.0);
  EXPECT_EQ(sentence_ratio(tok, "same words", "same words"), 1.0);
  EXPECT_THROW(sentence_ratio(tok, "a", "   "), InvalidArgument);
}

TEST(PremiumTest, MeanOfPerSentenceRatios) {
  const ParallelCorpus pc = make_parallel_corpus({"a b", "c d"}, {"1 2 3 4", "5 6 7 8"}, "xxx", "Latn");
  const PremiumReport r = premium(word_tokenizer(), pc);
  EXPECT_EQ(r.mean_ratio, 2.0);
  EXPECT_EQ(r.per_sentence_ratios, (std::vector<double>{2.0, 2.0}));
  EXPECT_EQ(r.n_pairs, 2u);
}

TEST(PremiumTest, HandCountedCorpus) {
  // Byte counts: English 5, 3, 4; target 10, 9, 6.
  const ParallelCorpus pc = make_parallel_corpus({"hello", "cat", "door"},
                                                 {"\xE0\xA4\xA8\xE0\xA4\xAE\xE0\xA4\xB8\x20", "\xE0\xA4\xAC\xE0\xA4\xBF\xE0\xA4\xB2", "abcdef"},
                                                 "hin", "Deva");
  const PremiumReport r = premium(byte_tokenizer(), pc);
  EXPECT_EQ(r.per_sentence_ratios, (std::vector<double>{10.0 / 5.0, 9.0 / 3.0, 6.0 / 4.0}));
  EXPECT_EQ(r.mean_ratio, (2.0 + 3.0 + 1.5) / 3.0);
  EXPECT_EQ(r.total_ratio, 25.0 / 12.0);
}

TEST(PremiumTest, EnglishAgainstItselfIsOne) {
  const std::vector<std::string> eng{"The cat sat.", "On the mat!", "Here."};
  const ParallelCorpus pc = make_parallel_corpus(eng, eng, "eng", "Latn");
  EXPECT_EQ(premium(word_tokenizer(), pc).mean_ratio, 1.0);
  EXPECT_EQ(premium(byte_tokenizer(), pc).mean_ratio, 1.0);
}

TEST(PremiumTest, SkipsZeroTokenEnglishAndFailsWhenNothingRemains) {
  const ParallelCorpus pc = make_parallel_corpus({"a", "  "}, {"b c", "d"}, "xxx", "Latn");
  const PremiumReport r = premium(word_tokenizer(), pc);
  EXPECT_EQ(r.n_pairs, 1u);
  EXPECT_EQ(r.n_skipped, 1u);
  EXPECT_EQ(r.mean_ratio, 2.0);
  EXPECT_THROW(premium(word_tokenizer(), make_parallel_corpus({"  "}, {"d"}, "xxx", "Latn")), InvalidArgument);
}

TEST(PremiumTest, DuplicatingPairsKeepsMean) {
  std::mt19937_64 rng(51);
  std::vector<std::string> eng, tgt;
  for (int i = 0; i < 37; ++i) {
    eng.push_back(testing::random_string(rng, {"a", "b", " "}, 3 + i % 7) + "z");
    tgt.push_back(testing::random_string(rng, {"\xC3\xA9", "c", " "}, 2 + i % 11) + "z");
  }
  const TokenizerHandle tok = byte_tokenizer();
  const PremiumReport once = premium(tok, make_parallel_corpus(eng, tgt, "x", "Y"));
  std::vector<std::string> eng2 = eng, tgt2 = tgt;
  eng2.insert(eng2.end(), eng.begin(), eng.end());
  tgt2.insert(tgt2.end(), tgt.begin(), tgt.end());
  const PremiumReport twice = premium(tok, make_parallel_corpus(eng2, tgt2, "x", "Y"));
  EXPECT_NEAR(twice.mean_ratio, once.mean_ratio, 1e-12);
  for (double r : once.per_sentence_ratios) EXPECT_GT(r, 0.0);
}

TEST(PremiumTest, ThreadCountIndependent) {
  std::mt19937_64 rng(53);
  std::vector<std::string> eng, tgt;
  for (int i = 0; i < 500; ++i) {
    eng.push_back(testing::random_string(rng, {"a", "b", " "}, 5 + i % 13) + "q");
    tgt.push_back(testing::random_string(rng, {"\xE0\xA4\x95", "c", " "}, 4 + i % 17) + "q");
  }
  const ParallelCorpus pc = make_parallel_corpus(eng, tgt, "x", "Y");
  const PremiumReport one = premium(byte_tokenizer(), pc, {1});
  const PremiumReport eight = premium(byte_tokenizer(), pc, {8});
  EXPECT_EQ(one.per_sentence_ratios, eight.per_sentence_ratios);
  EXPECT_EQ(one.mean_ratio, eight.mean_ratio);
}

TEST(PremiumMatrixTest, ShapeAndOrder) {
  const std::vector<TokenizerHandle> toks{word_tokenizer("w1"), byte_tokenizer(), word_tokenizer("w2")};
  const std::vector<ParallelCorpus> corpora{make_parallel_corpus({"a b"}, {"c d e f"}, "zzz", "Latn"),
                                            make_parallel_corpus({"a b"}, {"a b"}, "eng", "Latn")};
  const PremiumMatrix m = premium_matrix(toks, corpora, Aggregate::mean);
  ASSERT_EQ(m.cells.size(), 2u);
  ASSERT_EQ(m.cells[0].size(), 3u);
  EXPECT_EQ(m.languages, (std::vector<std::string>{"zzz (Latn)", "eng (Latn)"}));
  EXPECT_EQ(*m.value(0, 0), 2.0);
  EXPECT_EQ(*m.value(1, 1), 1.0);
  EXPECT_EQ(premium_csv(m), "language,w1,bytes,w2\nzzz (Latn),2.00,2.33,2.00\neng (Latn),1.00,1.00,1.00\n");
}

TEST(PremiumMatrixTest, TotalsAggregate) {
  const std::vector<TokenizerHandle> toks{word_tokenizer()};
  const std::vector<ParallelCorpus> corpora{
      make_parallel_corpus({"a", "a b c"}, {"x x x", "x x x"}, "zzz", "Latn")};
  EXPECT_EQ(*premium_matrix(toks, corpora, Aggregate::mean).value(0, 0), (3.0 + 1.0) / 2.0);
  EXPECT_EQ(*premium_matrix(toks, corpora, Aggregate::totals).value(0, 0), 6.0 / 4.0);
}

TEST(PremiumMatrixTest, FailingCellIsMarkedInvalid) {
  const TokenizerHandle failing("broken", [](std::string_view) -> std::vector<TokenId> {
    throw InvalidArgument("cannot encode");
  }, 0);
  const std::vector<TokenizerHandle> toks{word_tokenizer(), failing};
  const std::vector<ParallelCorpus> corpora{make_parallel_corpus({"a"}, {"b"}, "zzz", "Latn")};
  const PremiumMatrix m = premium_matrix(toks, corpora, Aggregate::mean);
  EXPECT_TRUE(m.value(0, 0).has_value());
  EXPECT_FALSE(m.value(0, 1).has_value());
  EXPECT_EQ(m.cells[0][1].error, "cannot encode");
  EXPECT_EQ(premium_csv(m), "language,words,broken\nzzz (Latn),1.00,NA\n");
}

TEST(PremiumMatrixTest, JsonKeepsFullPrecision) {
  const std::vector<TokenizerHandle> toks{byte_tokenizer()};
  const std::vector<ParallelCorpus> corpora{make_parallel_corpus({"abc"}, {"abcd"}, "zzz", "Latn")};
  const PremiumMatrix m = premium_matrix(toks, corpora, Aggregate::mean);
  const auto brief = nlohmann::json::parse(premium_json(m, false));
  EXPECT_EQ(brief["cells"][0][0]["mean_ratio"].get<double>(), 4.0 / 3.0);
  EXPECT_FALSE(brief["cells"][0][0].contains("per_sentence_ratios"));
  const auto verbose = nlohmann::json::parse(premium_json(m, true));
  EXPECT_EQ(verbose["cells"][0][0]["per_sentence_ratios"].size(), 1u);
}

TEST(AggregateTest, Parse) {
  EXPECT_EQ(parse_aggregate("mean"), Aggregate::mean);
  EXPECT_EQ(parse_aggregate("totals"), Aggregate::totals);
  EXPECT_THROW(parse_aggregate("median"), InvalidArgument);
}

}  // namespace
}  // namespace tokenlens
