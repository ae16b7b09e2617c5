#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tokenlens {

using TokenId = std::uint32_t;

// Ordered set of byte-string tokens with dense ids 0..n-1.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Throws InvalidArgument on duplicate tokens.
  explicit Vocabulary(std::vector<std::string> tokens);

  // Appends `token` unless present; returns its id either way.
  TokenId add(std::string token);

  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }

  std::string detokenize(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// One merge: tokens `left` and `right` concatenate into `result`. A rule's
// rank is its index in the MergeRuleList.
struct MergeRule {
  TokenId left = 0;
  TokenId right = 0;
  TokenId result = 0;

  friend bool operator==(const MergeRule&, const MergeRule&) = default;
};

using MergeRuleList = std::vector<MergeRule>;

struct MergeModel {
  Vocabulary vocab;
  MergeRuleList merges;
};

}  // namespace tokenlens
