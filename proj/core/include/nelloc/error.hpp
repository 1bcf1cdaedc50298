#pragma once

#include <stdexcept>
#include <string>

namespace nelloc {

enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  UnsupportedVariant,
  CorruptModel,
  BadMagic,
  UnsupportedVersion,
  Truncated,
  ShapeMismatch,
  CorruptHeader,
  FingerprintMismatch,
  StreamTruncated,
  LaneMismatch,
  ImageTooLarge,
  Io,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a code so callers (the CLI in
// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nelloc
