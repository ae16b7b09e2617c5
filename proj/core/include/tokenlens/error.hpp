#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tokenlens {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed UTF-8 input. `offset` is the byte offset of the first bad byte.
class EncodingError : public Error {
 public:
  EncodingError(const std::string& what, std::size_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// A caller-supplied argument violates an operation's preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Text contains a character that the vocabulary cannot represent.
class OutOfVocabulary : public Error {
 public:
  OutOfVocabulary(char32_t ch, std::size_t offset);

  char32_t character() const noexcept { return ch_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  char32_t ch_;
  std::size_t offset_;
};

}  // namespace tokenlens
