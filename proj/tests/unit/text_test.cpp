#include "tokenlens/text.hpp"

#include <random>

#include "test_util.hpp"
#include "tokenlens/error.hpp"

namespace tokenlens {
namespace {

using testing::TempDir;

TEST(Utf8Test, ValidatesAndDecodes) {
  EXPECT_TRUE(is_valid_utf8(""));
  EXPECT_TRUE(is_valid_utf8("h\xC3\xA9\xE2\x82\xAC\xF0\x9F\x98\x80"));
  EXPECT_EQ(decode_utf8("h\xC3\xA9\xE2\x82\xAC\xF0\x9F\x98\x80"), (std::u32string{U'h', 0xE9, 0x20AC, 0x1F600}));
  EXPECT_EQ(encode_utf8(std::u32string{U'h', 0xE9, 0x20AC, 0x1F600}), "h\xC3\xA9\xE2\x82\xAC\xF0\x9F\x98\x80");
}

TEST(Utf8Test, RejectsMalformedSequences) {
  EXPECT_EQ(find_invalid_utf8("ab\xFF"), 2u);
  EXPECT_EQ(find_invalid_utf8("\xC3"), 0u);                 // truncated
  EXPECT_EQ(find_invalid_utf8("\xC0\xAF"), 0u);             // overlong
  EXPECT_EQ(find_invalid_utf8("\xED\xA0\x80"), 0u);         // surrogate
  EXPECT_EQ(find_invalid_utf8("\xF4\x90\x80\x80"), 0u);     // > U+10FFFF
  EXPECT_EQ(find_invalid_utf8("a\xE2\x82"), 1u);
}

TEST(Utf8Test, DecodeReportsOffset) {
  try {
    decode_utf8("abc\xFF");
    FAIL() << "expected EncodingError";
  } catch (const EncodingError& e) {
    EXPECT_EQ(e.offset(), 3u);
  }
}

TEST(Utf8Test, CharByteLen) {
  EXPECT_EQ(char_byte_len(U'a'), 1);
  EXPECT_EQ(char_byte_len(U'é'), 2);
  EXPECT_EQ(char_byte_len(U'€'), 3);
  EXPECT_EQ(char_byte_len(U'\U0001F600'), 4);
}

TEST(Utf8Test, SplitChars) {
  EXPECT_EQ(split_utf8_chars("a\xC3\xA9"), (std::vector<std::string>{"a", "\xC3\xA9"}));
  EXPECT_TRUE(split_utf8_chars("").empty());
}

TEST(Utf8Test, RoundTripOverRandomScalars) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::uint32_t> cp(0, 0x10FFFF);
  for (int trial = 0; trial < 200; ++trial) {
    std::u32string s;
    while (s.size() < 20) {
      const char32_t c = cp(rng);
      if (is_unicode_scalar(c)) s.push_back(c);
    }
    const std::string bytes = encode_utf8(s);
    ASSERT_TRUE(is_valid_utf8(bytes));
    ASSERT_EQ(decode_utf8(bytes), s);
    std::size_t total = 0;
    for (char32_t c : s) total += static_cast<std::size_t>(char_byte_len(c));
    ASSERT_EQ(total, bytes.size());
  }
}

TEST(UnicodeBlockTest, KnownBlocks) {
  EXPECT_EQ(unicode_block(U'a'), "Basic Latin");
  EXPECT_EQ(unicode_block(U'é'), "Latin-1 Supplement");
  EXPECT_EQ(unicode_block(U'ক'), "Bengali");
  EXPECT_EQ(unicode_block(U'क'), "Devanagari");
  EXPECT_EQ(unicode_block(U'\U0001F600'), "Emoticons");
  EXPECT_EQ(unicode_block(0x0870), "No_Block");  // unassigned in 13.0
  EXPECT_EQ(unicode_version(), "13.0.0");
}

TEST(UnicodeBlockTest, TotalOverScalars) {
  for (char32_t c = 0; c <= 0x10FFFF; c += 97) {
    if (!is_unicode_scalar(c)) continue;
    const std::string_view b = unicode_block(c);
    ASSERT_FALSE(b.empty());
    ASSERT_EQ(b, unicode_block(c));
  }
}

TEST(RecoverTest, Examples) {
  EXPECT_EQ(recover_utf8_chars("ab"), (std::set<char32_t>{U'a', U'b'}));
  EXPECT_EQ(recover_utf8_chars("\xA9" "ab"), (std::set<char32_t>{U'a', U'b'}));
  EXPECT_TRUE(recover_utf8_chars("\xC3").empty());
  EXPECT_TRUE(recover_utf8_chars("").empty());
}

TEST(RecoverTest, TrimLimits) {
  // Four stray bytes in front cannot all be dropped.
  EXPECT_TRUE(recover_utf8_chars("\x80\x80\x80\x80" "ab").empty());
  EXPECT_EQ(recover_utf8_chars("\x80\x80\x80" "ab\x80\x80\x80"), (std::set<char32_t>{U'a', U'b'}));
  // A single valid byte is too short to count.
  EXPECT_TRUE(recover_utf8_chars("\x80" "a").empty());
  // Truncated three-byte character at both ends, intact one in the middle.
  EXPECT_EQ(recover_utf8_chars("\xA4\xBE\xE0\xA4\x95\xE0\xA4"), (std::set<char32_t>{0x0915}));
}

TEST(RecoverTest, RecoveredCharsComeFromTheSourceText) {
  std::mt19937_64 rng(5);
  const std::vector<char32_t> pool = {U'a', 0xE9, 0x0915, 0x0995, 0x20AC, 0x1F600, U'z'};
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_int_distribution<int> trim(0, 3);
  for (int trial = 0; trial < 300; ++trial) {
    std::u32string s;
    for (int i = 0; i < 4; ++i) s.push_back(pool[pick(rng)]);
    const std::string bytes = encode_utf8(s);
    const std::size_t front = static_cast<std::size_t>(trim(rng));
    const std::size_t back = static_cast<std::size_t>(trim(rng));
    if (front + back >= bytes.size()) continue;
    const std::set<char32_t> source(s.begin(), s.end());
    for (char32_t c : recover_utf8_chars(std::string_view(bytes).substr(front, bytes.size() - front - back)))
      ASSERT_TRUE(source.count(c)) << "recovered U+" << std::hex << static_cast<std::uint32_t>(c);
  }
}

TEST(CorpusTest, SplitLines) {
  EXPECT_EQ(split_lines("a\nb\n"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(split_lines("a\r\n\nb"), (std::vector<std::string>{"a", "", "b"}));
  EXPECT_TRUE(split_lines("").empty());
}

TEST(CorpusTest, LoadDropsEmptyLines) {
  TempDir dir;
  EXPECT_EQ(load_corpus(dir.write("two.txt", "a\nb\n")).documents, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(load_corpus(dir.write("gap.txt", "a\n\nb\n")).size(), 2u);
}

TEST(CorpusTest, LoadRejectsInvalidUtf8WithOffset) {
  TempDir dir;
  const auto p = dir.write("bad.txt", "ok\n\xFF\n");
  try {
    load_corpus(p);
    FAIL() << "expected EncodingError";
  } catch (const EncodingError& e) {
    EXPECT_EQ(e.offset(), 3u);
  }
}

TEST(CorpusTest, MissingFileIsIoError) {
  EXPECT_THROW(load_corpus("/nonexistent/corpus.txt"), IoError);
}

TEST(ParallelCorpusTest, PairsLineByLine) {
  TempDir dir;
  const auto pc = load_parallel_corpus(dir.write("e.txt", "a\nb\nc\n"), dir.write("t.txt", "x\ny\nz\n"), "hin", "Deva");
  ASSERT_EQ(pc.pairs.size(), 3u);
  EXPECT_EQ(pc.pairs[1].english, "b");
  EXPECT_EQ(pc.pairs[1].target, "y");
  EXPECT_EQ(pc.n_skipped, 0u);
  EXPECT_EQ(pc.label(), "hin (Deva)");
}

TEST(ParallelCorpusTest, LineCountMismatch) {
  TempDir dir;
  try {
    load_parallel_corpus(dir.write("e.txt", "a\nb\nc\n"), dir.write("t.txt", "w\nx\ny\nz\n"), "hin", "Deva");
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('3'), std::string::npos);
    EXPECT_NE(msg.find('4'), std::string::npos);
  }
}

TEST(ParallelCorpusTest, SkipsEmptySides) {
  const auto pc = make_parallel_corpus({"a", "", "c"}, {"x", "y", "z"}, "ben", "Beng");
  ASSERT_EQ(pc.pairs.size(), 2u);
  EXPECT_EQ(pc.n_skipped, 1u);
  EXPECT_EQ(pc.pairs[1].english, "c");
  EXPECT_EQ(pc.pairs[1].target, "z");

  const auto empty_target = make_parallel_corpus({"a", "b"}, {"", "y"}, "ben", "Beng");
  EXPECT_EQ(empty_target.pairs.size(), 1u);
  EXPECT_EQ(empty_target.n_skipped, 1u);
}

}  // namespace
}  // namespace tokenlens
