#include "tokenlens_cli/cli.hpp"

#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tokenlens/byte_level.hpp"
#include "tokenlens/io.hpp"

namespace tokenlens::cli {
namespace {

using testing::slurp;
using testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "tokenlens");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--corpus", "x.txt"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--algorithm", "bogus", "--corpus", "x", "--out", "o"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(CliTest, TrainWritesVocabMergesAndManifest) {
  const TempDir dir;
  const auto corpus = dir.write("c.txt", "she_shakes_shoes\n");
  const Result r = run({"train", "--algorithm", "bpe", "--corpus", corpus.string(), "--merges", "3", "--out",
                        (dir / "out").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Vocabulary v = load_vocab(dir / "out" / "vocab.json");
  const MergeRuleList m = load_merges(dir / "out" / "merges.json", v);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(v.token(m[0].result), "sh");
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "manifest.json"));
}

TEST(CliTest, TrainRejectsTargetBelowCharset) {
  const TempDir dir;
  const auto corpus = dir.write("c.txt", "abcdef\n");
  const Result r = run({"train", "--algorithm", "bpe", "--corpus", corpus.string(), "--vocab-size", "2", "--out",
                        (dir / "out").string()});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_FALSE(r.err.empty());
}

TEST(CliTest, CompareNeedsTwoVocabularies) {
  const TempDir dir;
  const auto a = dir.write("a.txt", "x\ny\n");
  const Result r = run({"compare", "--vocab", "a=" + a.string(), "--out", (dir / "o.csv").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("need >= 2"), std::string::npos);
}

TEST(CliTest, CompareReportCarriesManifestDigest) {
  const TempDir dir;
  const auto a = dir.write("a.txt", "x\ny\n");
  const auto b = dir.write("b.txt", "y\nz\n");
  const auto out = dir / "o.csv";
  const Result r = run({"compare", "--vocab", "a=" + a.string(), "--vocab", "b=" + b.string(), "--out", out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string report = slurp(out);
  const std::string header = first_line(report);
  ASSERT_EQ(header.rfind("# tokenlens manifest sha256=", 0), 0u);
  EXPECT_EQ(header.size(), std::string("# tokenlens manifest sha256=").size() + 64);
  EXPECT_NE(report.find("a,1,0.3333333333333333"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "o.csv.manifest.json"));

  // Same inputs under a different thread count: identical bytes.
  const auto out8 = dir / "o8.csv";
  ASSERT_EQ(run({"compare", "--vocab", "a=" + a.string(), "--vocab", "b=" + b.string(), "--out", out8.string(),
                 "--threads", "8"})
                .code,
            kExitOk);
  EXPECT_EQ(slurp(out8), report);

  // A changed input changes the digest.
  dir.write("b.txt", "y\nw\n");
  ASSERT_EQ(run({"compare", "--vocab", "a=" + a.string(), "--vocab", "b=" + b.string(), "--out", out8.string()}).code,
            kExitOk);
  EXPECT_NE(first_line(slurp(out8)), header);
}

TEST(CliTest, PremiumWritesMatrix) {
  const TempDir dir;
  const auto vocab = dir.write("v.txt", "a\nb\nc\n \n");
  const auto en = dir.write("en.txt", "ab\nc\n");
  const auto xx = dir.write("xx.txt", "a b\nc c\n");
  const auto out = dir / "p.csv";
  const Result r = run({"premium", "--tokenizer", "t=bpe:" + vocab.string(), "--english", en.string(), "--target",
                        "xxx:Latn=" + xx.string(), "--out", out.string(), "--json", (dir / "p.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string report = slurp(out);
  // Ratios 3/2 and 3/1, mean 2.25.
  EXPECT_NE(report.find("language,t\nxxx (Latn),2.25\n"), std::string::npos) << report;
  EXPECT_TRUE(std::filesystem::exists(dir / "p.json"));
}

TEST(CliTest, AugmentAndEvalToyEncoder) {
  const TempDir dir;
  const auto corpus = dir.write("c.txt", "caf\xC3\xA9 \xCF\x89\n");
  std::vector<std::string> bytes;
  for (int b = 0; b < 256; ++b) bytes.push_back(byte_level_encode(std::string(1, static_cast<char>(b))));
  const auto vocab = dir.write("bytes.json", vocab_json(Vocabulary(bytes)));
  const auto plan = dir / "plan.json";
  const Result a = run({"augment", "--tokenizer", "bytes=bpe-bytes:" + vocab.string(), "--v0", "random:1:8", "--encoder",
                        "toy:0:2", "--layer", "1", "--strategy", "knn:3", "--corpus", corpus.string(), "--out",
                        plan.string()});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  const AugmentationPlan p = load_plan(plan);
  EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(p.strategy.label(), "knn:3");
  const auto report = dir / "eval.csv";
  const Result e = run({"eval", "--plan", plan.string(), "--corpus", "x=" + corpus.string(), "--out", report.string()});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  EXPECT_NE(slurp(report).find("layer,strategy,k,mean,x\n1,knn,3,"), std::string::npos) << slurp(report);
}

TEST(CliTest, AugmentRejectsInvalidStrategy) {
  const TempDir dir;
  const auto corpus = dir.write("c.txt", "x\n");
  const auto vocab = dir.write("v.txt", "x\n");
  EXPECT_EQ(run({"augment", "--tokenizer", "bpe:" + vocab.string(), "--v0", "random:1:4", "--strategy", "knn:0",
                 "--corpus", corpus.string(), "--out", (dir / "p.json").string()})
                .code,
            kExitUsage);
}

}  // namespace
}  // namespace tokenlens::cli
