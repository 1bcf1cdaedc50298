#include <string>

#include "nelloc/coders.hpp"
#include "nelloc/error.hpp"

namespace nelloc {

namespace {

constexpr std::uint64_t kTop = 0xFFFFFFFFull;
constexpr std::uint64_t kHalf = 1ull << 31;
constexpr std::uint64_t kQuarter = 1ull << 30;
constexpr std::uint64_t kThreeQuarters = 3ull << 30;
// The decoder may legitimately look this far past the last written bit.
constexpr std::size_t kMaxOverread = 32;

}  // namespace

void ArithmeticEncoder::put_bit(bool bit) {
  const std::size_t byte = out_.bit_length / 8;
  if (byte == out_.bytes.size()) out_.bytes.push_back(0);
  if (bit) out_.bytes[byte] |= static_cast<std::uint8_t>(0x80u >> (out_.bit_length % 8));
  ++out_.bit_length;
}

void ArithmeticEncoder::put_bit_plus_pending(bool bit) {
  put_bit(bit);
  for (; pending_ > 0; --pending_) put_bit(!bit);
}

void ArithmeticEncoder::encode(std::uint8_t symbol, const QuantizedPmf& pmf) {
  const std::uint64_t range = high_ - low_ + 1;
  high_ = low_ + (range * pmf.cumulative(symbol + 1u)) / QuantizedPmf::total() - 1;
  low_ = low_ + (range * pmf.cumulative(symbol)) / QuantizedPmf::total();
  for (;;) {
    if (high_ < kHalf) {
      put_bit_plus_pending(false);
    } else if (low_ >= kHalf) {
      put_bit_plus_pending(true);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ = 2 * low_;
    high_ = 2 * high_ + 1;
  }
}

Bitstream ArithmeticEncoder::finish() {
  // Two more bits select a point inside [low, high]; zero padding completes it.
  ++pending_;
  put_bit_plus_pending(low_ >= kQuarter);
  Bitstream out = std::move(out_);
  out_ = Bitstream{};
  low_ = 0;
  high_ = kTop;
  pending_ = 0;
  return out;
}

ArithmeticDecoder::ArithmeticDecoder(const Bitstream& stream) : stream_(stream) {
  if (stream.bit_length > stream.bytes.size() * 8) {
    throw Error(ErrorCode::CorruptHeader, "bitstream length exceeds its byte array");
  }
  for (int n = 0; n < 32; ++n) value_ = (value_ << 1) | (next_bit() ? 1u : 0u);
}

bool ArithmeticDecoder::next_bit() {
  const std::size_t pos = bit_pos_++;
  if (pos >= stream_.bit_length) {
    if (pos >= stream_.bit_length + kMaxOverread) {
      throw Error(ErrorCode::StreamTruncated, "arithmetic decoder ran past the end of the stream");
    }
    return false;
  }
  return (stream_.bytes[pos / 8] >> (7 - pos % 8)) & 1u;
}

std::uint8_t ArithmeticDecoder::decode(const QuantizedPmf& pmf) {
  const std::uint64_t range = high_ - low_ + 1;
  const std::uint64_t target = ((value_ - low_ + 1) * QuantizedPmf::total() - 1) / range;
  if (target >= QuantizedPmf::total()) {
    throw Error(ErrorCode::CorruptHeader, "arithmetic decoder state left its interval");
  }
  const std::uint8_t symbol = pmf.symbol_for(static_cast<std::uint32_t>(target));
  high_ = low_ + (range * pmf.cumulative(symbol + 1u)) / QuantizedPmf::total() - 1;
  low_ = low_ + (range * pmf.cumulative(symbol)) / QuantizedPmf::total();
  for (;;) {
    if (high_ < kHalf) {
      // nothing to subtract
    } else if (low_ >= kHalf) {
      low_ -= kHalf;
      high_ -= kHalf;
      value_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      low_ -= kQuarter;
      high_ -= kQuarter;
      value_ -= kQuarter;
    } else {
      break;
    }
    low_ = 2 * low_;
    high_ = 2 * high_ + 1;
    value_ = 2 * value_ + (next_bit() ? 1u : 0u);
  }
  return symbol;
}

Bitstream ac_encode(std::span<const SymbolRecord> records) {
  ArithmeticEncoder enc;
  for (const auto& r : records) enc.encode(r.symbol, r.pmf);
  return enc.finish();
}

std::vector<std::uint8_t> ac_decode(const Bitstream& stream, std::size_t count,
                                    const PmfCallback& next_pmf) {
  ArithmeticDecoder dec(stream);
  std::vector<std::uint8_t> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) out.push_back(dec.decode(next_pmf(out)));
  return out;
}

}  // namespace nelloc
