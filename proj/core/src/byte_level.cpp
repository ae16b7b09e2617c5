#include "tokenlens/byte_level.hpp"

#include <array>
#include <unordered_map>

#include "tokenlens/text.hpp"

namespace tokenlens {

namespace {

struct ByteTables {
  std::array<char32_t, 256> to_char{};
  std::unordered_map<char32_t, unsigned char> to_byte;

  ByteTables() {
    const auto printable = [](int b) {
      return (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
    };
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) {
      to_char[b] = printable(b) ? static_cast<char32_t>(b) : next++;
      to_byte.emplace(to_char[b], static_cast<unsigned char>(b));
    }
  }
};

const ByteTables& tables() {
  static const ByteTables t;
  return t;
}

}  // namespace

std::string byte_level_encode(std::string_view raw) {
  std::string out;
  out.reserve(raw.size() * 2);
  for (unsigned char b : raw) out += encode_utf8(tables().to_char[b]);
  return out;
}

std::string byte_level_decode(std::string_view mapped) {
  std::string out;
  out.reserve(mapped.size());
  for (char32_t ch : decode_utf8(mapped)) {
    const auto it = tables().to_byte.find(ch);
    if (it != tables().to_byte.end())
      out.push_back(static_cast<char>(it->second));
    else
      out += encode_utf8(ch);
  }
  return out;
}

}  // namespace tokenlens
