#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nelloc/mixture.hpp"

namespace nelloc {

struct SymbolRecord {
  std::uint8_t symbol = 0;
  QuantizedPmf pmf;
};

struct Bitstream {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_length = 0;

  bool operator==(const Bitstream&) const = default;
};

// Called once per decoded symbol, in order, with the symbols decoded so far.
using PmfCallback = std::function<QuantizedPmf(std::span<const std::uint8_t> decoded)>;

// ---------------------------------------------------------------------------
// Arithmetic coding: 32-bit low/high interval with deferred (pending) bits for
// the straddling-midpoint case, MSB-first bit output.

class ArithmeticEncoder {
 public:
  void encode(std::uint8_t symbol, const QuantizedPmf& pmf);
  Bitstream finish();

 private:
  void put_bit(bool bit);
  void put_bit_plus_pending(bool bit);

  std::uint64_t low_ = 0;
  std::uint64_t high_ = 0xFFFFFFFFull;
  std::uint64_t pending_ = 0;
  Bitstream out_;
};

class ArithmeticDecoder {
 public:
  explicit ArithmeticDecoder(const Bitstream& stream);
  std::uint8_t decode(const QuantizedPmf& pmf);

 private:
  bool next_bit();

  const Bitstream& stream_;
  std::size_t bit_pos_ = 0;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = 0xFFFFFFFFull;
  std::uint64_t value_ = 0;
};

Bitstream ac_encode(std::span<const SymbolRecord> records);
std::vector<std::uint8_t> ac_decode(const Bitstream& stream, std::size_t count,
                                    const PmfCallback& next_pmf);

// ---------------------------------------------------------------------------
// rANS with a 64-bit state kept in [2^32, 2^64) and 32-bit renormalization
// words. Stream layout: final encoder state (8 bytes LE) followed by the
// emitted words (4 bytes LE each) in the order the decoder consumes them.

inline constexpr std::uint64_t kRansLowerBound = 1ull << 32;

class RansEncoder {
 public:
  // Symbols must be pushed in reverse of the order they will be decoded.
  void encode(std::uint8_t symbol, const QuantizedPmf& pmf);
  Bitstream finish() const;

 private:
  std::uint64_t state_ = kRansLowerBound;
  std::vector<std::uint32_t> words_;
};

class RansDecoder {
 public:
  explicit RansDecoder(const Bitstream& stream);
  std::uint8_t decode(const QuantizedPmf& pmf);
  // Throws unless the stream was consumed exactly and the state returned to
  // its initial value.
  void finish() const;

 private:
  const Bitstream& stream_;
  std::size_t pos_ = 8;
  std::uint64_t state_ = 0;
};

Bitstream rans_encode(std::span<const SymbolRecord> records);
std::vector<std::uint8_t> rans_decode(const Bitstream& stream, std::size_t count,
                                      const PmfCallback& next_pmf);

// ---------------------------------------------------------------------------
// Interleaved rANS: one rANS state per lane sharing a single word stream.
// Lanes take turns symbol by symbol (step t visits lanes 0..B-1, skipping
// lanes that have fewer than t + 1 symbols). Layout: B lane states (8 bytes LE
// each) then the shared words in decoder order. With one lane the stream is
// byte-identical to rans_encode.

struct InterleavedStream {
  Bitstream stream;
  // Bytes attributable to each lane: its state plus the words it emitted.
  std::vector<std::uint32_t> lane_bytes;
};

InterleavedStream ians_encode(std::span<const std::vector<SymbolRecord>> lanes);

class InterleavedRansDecoder {
 public:
  InterleavedRansDecoder(const Bitstream& stream, std::vector<std::size_t> lane_counts);

  bool done() const { return lane_ == lane_counts_.size(); }
  // Lane and per-lane index of the next symbol to decode.
  std::size_t next_lane() const { return lane_; }
  std::size_t next_index() const { return step_; }
  std::uint8_t decode(const QuantizedPmf& pmf);
  // Bytes consumed per lane so far (state plus words read).
  const std::vector<std::uint32_t>& lane_bytes() const { return lane_bytes_; }
  void finish() const;

 private:
  void advance();

  const Bitstream& stream_;
  std::vector<std::size_t> lane_counts_;
  std::vector<std::uint64_t> states_;
  std::vector<std::uint32_t> lane_bytes_;
  std::size_t pos_ = 0;
  std::size_t step_ = 0;
  std::size_t lane_ = 0;
};

// Per-lane callback: (lane, symbols decoded so far in that lane).
using LanePmfCallback =
    std::function<QuantizedPmf(std::size_t lane, std::span<const std::uint8_t> decoded)>;

std::vector<std::vector<std::uint8_t>> ians_decode(const Bitstream& stream,
                                                   std::span<const std::size_t> lane_counts,
                                                   const LanePmfCallback& next_pmf);

}  // namespace nelloc
