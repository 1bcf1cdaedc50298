#include <algorithm>
#include <string>

#include "nelloc/coders.hpp"
#include "nelloc/error.hpp"

namespace nelloc {

namespace {

constexpr std::uint64_t kSlotMask = QuantizedPmf::total() - 1;

inline void rans_put(std::uint64_t& state, std::vector<std::uint32_t>& words, std::uint8_t symbol,
                     const QuantizedPmf& pmf) {
  const std::uint64_t freq = pmf.freq(symbol);
  const std::uint64_t x_max = ((kRansLowerBound >> kPmfTotalBits) << 32) * freq;
  if (state >= x_max) {
    words.push_back(static_cast<std::uint32_t>(state));
    state >>= 32;
  }
  state = ((state / freq) << kPmfTotalBits) + (state % freq) + pmf.cumulative(symbol);
}

inline std::uint8_t rans_get(std::uint64_t& state, const QuantizedPmf& pmf) {
  const auto slot = static_cast<std::uint32_t>(state & kSlotMask);
  const std::uint8_t symbol = pmf.symbol_for(slot);
  state = pmf.freq(symbol) * (state >> kPmfTotalBits) + slot - pmf.cumulative(symbol);
  return symbol;
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint64_t get_u64(const std::vector<std::uint8_t>& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int s = 0; s < 8; ++s) v |= static_cast<std::uint64_t>(in[pos + s]) << (8 * s);
  return v;
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int s = 0; s < 4; ++s) v |= static_cast<std::uint32_t>(in[pos + s]) << (8 * s);
  return v;
}

Bitstream make_stream(std::span<const std::uint64_t> states, const std::vector<std::uint32_t>& words) {
  Bitstream out;
  out.bytes.reserve(8 * states.size() + 4 * words.size());
  for (std::uint64_t s : states) put_u64(out.bytes, s);
  for (auto it = words.rbegin(); it != words.rend(); ++it) put_u32(out.bytes, *it);
  out.bit_length = out.bytes.size() * 8;
  return out;
}

void check_state(std::uint64_t state) {
  if (state < kRansLowerBound) {
    throw Error(ErrorCode::CorruptHeader, "rANS state below its normalization bound");
  }
}

}  // namespace

void RansEncoder::encode(std::uint8_t symbol, const QuantizedPmf& pmf) {
  rans_put(state_, words_, symbol, pmf);
}

Bitstream RansEncoder::finish() const {
  const std::uint64_t states[] = {state_};
  return make_stream(states, words_);
}

RansDecoder::RansDecoder(const Bitstream& stream) : stream_(stream) {
  if (stream.bytes.size() < 8) throw Error(ErrorCode::StreamTruncated, "rANS stream shorter than its state");
  state_ = get_u64(stream.bytes, 0);
  check_state(state_);
}

std::uint8_t RansDecoder::decode(const QuantizedPmf& pmf) {
  const std::uint8_t symbol = rans_get(state_, pmf);
  if (state_ < kRansLowerBound) {
    if (stream_.bytes.size() - pos_ < 4) {
      throw Error(ErrorCode::StreamTruncated, "rANS decoder ran past the end of the stream");
    }
    state_ = (state_ << 32) | get_u32(stream_.bytes, pos_);
    pos_ += 4;
  }
  return symbol;
}

void RansDecoder::finish() const {
  if (pos_ != stream_.bytes.size() || state_ != kRansLowerBound) {
    throw Error(ErrorCode::CorruptHeader, "rANS stream did not decode to its initial state");
  }
}

Bitstream rans_encode(std::span<const SymbolRecord> records) {
  RansEncoder enc;
  for (auto it = records.rbegin(); it != records.rend(); ++it) enc.encode(it->symbol, it->pmf);
  return enc.finish();
}

std::vector<std::uint8_t> rans_decode(const Bitstream& stream, std::size_t count,
                                      const PmfCallback& next_pmf) {
  RansDecoder dec(stream);
  std::vector<std::uint8_t> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) out.push_back(dec.decode(next_pmf(out)));
  dec.finish();
  return out;
}

InterleavedStream ians_encode(std::span<const std::vector<SymbolRecord>> lanes) {
  std::vector<std::uint64_t> states(lanes.size(), kRansLowerBound);
  std::vector<std::uint32_t> words;
  InterleavedStream out;
  out.lane_bytes.assign(lanes.size(), 8);
  std::size_t steps = 0;
  for (const auto& lane : lanes) steps = std::max(steps, lane.size());
  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t l = lanes.size(); l-- > 0;) {
      if (t >= lanes[l].size()) continue;
      const std::size_t before = words.size();
      rans_put(states[l], words, lanes[l][t].symbol, lanes[l][t].pmf);
      out.lane_bytes[l] += static_cast<std::uint32_t>(4 * (words.size() - before));
    }
  }
  out.stream = make_stream(states, words);
  return out;
}

InterleavedRansDecoder::InterleavedRansDecoder(const Bitstream& stream,
                                               std::vector<std::size_t> lane_counts)
    : stream_(stream), lane_counts_(std::move(lane_counts)) {
  const std::size_t lanes = lane_counts_.size();
  if (stream.bytes.size() < 8 * lanes) {
    throw Error(ErrorCode::LaneMismatch, "stream holds fewer lane states than the " +
                                             std::to_string(lanes) + " lanes requested");
  }
  states_.resize(lanes);
  lane_bytes_.assign(lanes, 8);
  for (std::size_t l = 0; l < lanes; ++l) {
    states_[l] = get_u64(stream.bytes, 8 * l);
    check_state(states_[l]);
  }
  pos_ = 8 * lanes;
  lane_ = 0;
  step_ = 0;
  // Position on the first lane that has a symbol at step 0.
  if (lanes > 0 && lane_counts_[0] == 0) advance();
  if (lanes == 0) lane_ = 0;
}

void InterleavedRansDecoder::advance() {
  const std::size_t lanes = lane_counts_.size();
  std::size_t steps = 0;
  for (std::size_t c : lane_counts_) steps = std::max(steps, c);
  for (;;) {
    ++lane_;
    if (lane_ == lanes) {
      lane_ = 0;
      ++step_;
    }
    if (step_ >= steps) {
      lane_ = lanes;
      return;
    }
    if (step_ < lane_counts_[lane_]) return;
  }
}

std::uint8_t InterleavedRansDecoder::decode(const QuantizedPmf& pmf) {
  if (done()) throw Error(ErrorCode::InvalidArgument, "interleaved decoder has no symbols left");
  std::uint64_t& state = states_[lane_];
  const std::uint8_t symbol = rans_get(state, pmf);
  if (state < kRansLowerBound) {
    if (stream_.bytes.size() - pos_ < 4) {
      throw Error(ErrorCode::StreamTruncated, "interleaved rANS decoder ran past the end of the stream");
    }
    state = (state << 32) | get_u32(stream_.bytes, pos_);
    pos_ += 4;
    lane_bytes_[lane_] += 4;
  }
  advance();
  return symbol;
}

void InterleavedRansDecoder::finish() const {
  if (!done() || pos_ != stream_.bytes.size()) {
    throw Error(ErrorCode::CorruptHeader, "interleaved rANS stream not consumed exactly");
  }
  for (std::uint64_t s : states_) {
    if (s != kRansLowerBound) {
      throw Error(ErrorCode::CorruptHeader, "interleaved rANS lane did not return to its initial state");
    }
  }
}

std::vector<std::vector<std::uint8_t>> ians_decode(const Bitstream& stream,
                                                   std::span<const std::size_t> lane_counts,
                                                   const LanePmfCallback& next_pmf) {
  InterleavedRansDecoder dec(stream, std::vector<std::size_t>(lane_counts.begin(), lane_counts.end()));
  std::vector<std::vector<std::uint8_t>> out(lane_counts.size());
  for (std::size_t l = 0; l < lane_counts.size(); ++l) out[l].reserve(lane_counts[l]);
  while (!dec.done()) {
    const std::size_t lane = dec.next_lane();
    out[lane].push_back(dec.decode(next_pmf(lane, out[lane])));
  }
  dec.finish();
  return out;
}

}  // namespace nelloc
