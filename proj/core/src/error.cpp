#include "nelloc/error.hpp"

namespace nelloc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::UnsupportedVariant: return "unsupported variant";
    case ErrorCode::CorruptModel: return "corrupted model";
    case ErrorCode::BadMagic: return "bad magic";
    case ErrorCode::UnsupportedVersion: return "unsupported version";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::ShapeMismatch: return "shape mismatch";
    case ErrorCode::CorruptHeader: return "corrupt header";
    case ErrorCode::FingerprintMismatch: return "fingerprint mismatch";
    case ErrorCode::StreamTruncated: return "stream truncated";
    case ErrorCode::LaneMismatch: return "lane mismatch";
    case ErrorCode::ImageTooLarge: return "image too large";
    case ErrorCode::Io: return "i/o error";
  }
  return "unknown error";
}

}  // namespace nelloc
