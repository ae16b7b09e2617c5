#pragma once

#include <string>
#include <string_view>

namespace tokenlens {

// The reversible byte-to-character mapping used by GPT-2 style byte-level
// vocabularies: printable Latin-1 bytes map to themselves and the remaining
// bytes map to U+0100 onwards (so the space byte becomes "Ġ").

// Maps every byte of `raw` to its stand-in character (UTF-8 output).
std::string byte_level_encode(std::string_view raw);

// Inverse of byte_level_encode. Characters that are not stand-ins for any
// byte are copied through as UTF-8.
std::string byte_level_decode(std::string_view mapped);

}  // namespace tokenlens
