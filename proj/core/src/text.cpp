#include "tokenlens/text.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "tokenlens/error.hpp"

namespace tokenlens {

namespace {

struct BlockRange {
  char32_t first;
  char32_t last;
  std::string_view name;
};

#include "unicode_blocks_table.inc"

constexpr std::string_view kNoBlock = "No_Block";

// Decodes one scalar starting at bytes[pos]. Returns the sequence length, or
// 0 when the bytes at pos do not start a valid sequence.
std::size_t decode_one(std::string_view bytes, std::size_t pos, char32_t& out) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(bytes[i]); };
  const std::size_t n = bytes.size() - pos;
  const unsigned char b0 = byte(pos);
  if (b0 < 0x80) {
    out = b0;
    return 1;
  }
  std::size_t len;
  char32_t cp;
  char32_t min;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    return 0;
  }
  if (n < len) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    const unsigned char b = byte(pos + i);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || !is_unicode_scalar(cp)) return 0;
  out = cp;
  return len;
}

}  // namespace

OutOfVocabulary::OutOfVocabulary(char32_t ch, std::size_t offset)
    : Error([&] {
        std::ostringstream os;
        os << "character U+" << std::hex << std::uppercase << static_cast<std::uint32_t>(ch)
           << std::dec << " at byte offset " << offset << " is not in the vocabulary";
        return os.str();
      }()),
      ch_(ch),
      offset_(offset) {}

bool is_unicode_scalar(char32_t ch) noexcept {
  return ch <= 0x10FFFF && !(ch >= 0xD800 && ch <= 0xDFFF);
}

std::optional<std::size_t> find_invalid_utf8(std::string_view bytes) {
  std::size_t pos = 0;
  char32_t cp;
  while (pos < bytes.size()) {
    const std::size_t len = decode_one(bytes, pos, cp);
    if (len == 0) return pos;
    pos += len;
  }
  return std::nullopt;
}

std::u32string decode_utf8(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t pos = 0;
  char32_t cp;
  while (pos < bytes.size()) {
    const std::size_t len = decode_one(bytes, pos, cp);
    if (len == 0) throw EncodingError("invalid UTF-8", pos);
    out.push_back(cp);
    pos += len;
  }
  return out;
}

std::string encode_utf8(char32_t ch) {
  if (!is_unicode_scalar(ch)) throw InvalidArgument("not a Unicode scalar value");
  std::string out;
  if (ch < 0x80) {
    out.push_back(static_cast<char>(ch));
  } else if (ch < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (ch >> 6)));
    out.push_back(static_cast<char>(0x80 | (ch & 0x3F)));
  } else if (ch < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (ch >> 12)));
    out.push_back(static_cast<char>(0x80 | ((ch >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (ch & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (ch >> 18)));
    out.push_back(static_cast<char>(0x80 | ((ch >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((ch >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (ch & 0x3F)));
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  for (char32_t ch : text) out += encode_utf8(ch);
  return out;
}

std::vector<std::string> split_utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  char32_t cp;
  while (pos < text.size()) {
    const std::size_t len = decode_one(text, pos, cp);
    if (len == 0) throw EncodingError("invalid UTF-8", pos);
    out.emplace_back(text.substr(pos, len));
    pos += len;
  }
  return out;
}

int char_byte_len(char32_t ch) {
  if (ch < 0x80) return 1;
  if (ch < 0x800) return 2;
  if (ch < 0x10000) return 3;
  return 4;
}

std::set<char32_t> recover_utf8_chars(std::string_view bytes) {
  if (is_valid_utf8(bytes)) {
    const std::u32string chars = decode_utf8(bytes);
    return {chars.begin(), chars.end()};
  }
  constexpr std::size_t kMaxTrim = 3;
  constexpr std::size_t kMinKept = 2;
  const std::size_t n = bytes.size();
  std::optional<std::string_view> best;
  for (std::size_t front = 0; front <= kMaxTrim && front < n; ++front) {
    for (std::size_t back = 0; back <= kMaxTrim && front + back < n; ++back) {
      const std::size_t len = n - front - back;
      if (len < kMinKept) continue;
      if (best && len <= best->size()) continue;
      const std::string_view region = bytes.substr(front, len);
      if (is_valid_utf8(region)) best = region;
    }
  }
  if (!best) return {};
  const std::u32string chars = decode_utf8(*best);
  return {chars.begin(), chars.end()};
}

std::string_view unicode_block(char32_t ch) {
  const auto it = std::upper_bound(std::begin(kBlockTable), std::end(kBlockTable), ch,
                                   [](char32_t c, const BlockRange& r) { return c < r.first; });
  if (it == std::begin(kBlockTable)) return kNoBlock;
  const BlockRange& r = *std::prev(it);
  return ch <= r.last ? r.name : kNoBlock;
}

std::string_view unicode_version() { return kBlockTableVersion; }

std::string read_utf8_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  if (const auto bad = find_invalid_utf8(data))
    throw EncodingError(path.string() + ": invalid UTF-8", *bad);
  return data;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = end + 1;
  }
  return lines;
}

Corpus load_corpus(const std::filesystem::path& path) {
  Corpus corpus;
  for (auto& line : split_lines(read_utf8_file(path)))
    if (!line.empty()) corpus.documents.push_back(std::move(line));
  return corpus;
}

ParallelCorpus make_parallel_corpus(const std::vector<std::string>& english,
                                    const std::vector<std::string>& target, std::string lang,
                                    std::string script) {
  if (english.size() != target.size())
    throw InvalidArgument("line count mismatch: english has " + std::to_string(english.size()) +
                          " lines, target has " + std::to_string(target.size()));
  ParallelCorpus pc;
  pc.target_lang = std::move(lang);
  pc.target_script = std::move(script);
  for (std::size_t i = 0; i < english.size(); ++i) {
    if (english[i].empty() || target[i].empty()) {
      ++pc.n_skipped;
      continue;
    }
    pc.pairs.push_back({english[i], target[i]});
  }
  return pc;
}

ParallelCorpus load_parallel_corpus(const std::filesystem::path& english_path,
                                    const std::filesystem::path& target_path, std::string lang,
                                    std::string script) {
  return make_parallel_corpus(split_lines(read_utf8_file(english_path)),
                              split_lines(read_utf8_file(target_path)), std::move(lang),
                              std::move(script));
}

}  // namespace tokenlens
