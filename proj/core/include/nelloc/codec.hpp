#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nelloc/coders.hpp"
#include "nelloc/image.hpp"
#include "nelloc/model.hpp"

namespace nelloc {

enum class CoderKind : std::uint8_t { Arithmetic = 0, Rans = 1, InterleavedRans = 2 };

const char* coder_name(CoderKind kind);

struct PatchGrid {
  std::uint8_t rows = 1;
  std::uint8_t cols = 1;

  std::size_t count() const { return std::size_t{rows} * cols; }
  bool operator==(const PatchGrid&) const = default;
};

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
};

struct PatchRect {
  std::size_t row, col, height, width;
};

// Patch p (raster order over the grid). The last patch row/column absorbs the
// remainder when the image does not divide evenly.
PatchRect patch_rect(std::size_t height, std::size_t width, PatchGrid grid, std::size_t p);

// On-disk artifact:
//   "NLC1" | version u8 | coder u8 | fingerprint u64 | H u16 | W u16 | C u8 |
//   grid rows u8 | grid cols u8 | payload length u32 per patch | payload
// All integers little-endian. For AC and rANS the payload is the patch streams
// back to back; for interleaved rANS it is one stream whose per-lane byte
// shares are recorded in the length table.
struct CodeContainer {
  CoderKind coder = CoderKind::Arithmetic;
  std::uint64_t fingerprint = 0;
  std::uint16_t height = 0;
  std::uint16_t width = 0;
  std::uint8_t channels = 0;
  PatchGrid grid;
  std::vector<std::uint32_t> payload_lengths;
  std::vector<std::uint8_t> payload;

  std::size_t header_size() const { return 21 + 4 * payload_lengths.size(); }
  std::size_t size() const { return header_size() + payload.size(); }
  // 8 * container bytes / (H * W * C).
  double bpd() const;

  bool operator==(const CodeContainer&) const = default;
};

inline constexpr std::uint8_t kContainerVersion = 1;

std::vector<std::uint8_t> serialize(const CodeContainer& container);
CodeContainer parse_container(std::span<const std::uint8_t> bytes);

CodeContainer compress(const Image& image, const WeightBundle& model, CoderKind coder,
                       PatchGrid grid = {});

// Receives every pixel read the decoder makes while predicting a target pixel.
// Coordinates are relative to the patch being decoded.
class DecodeObserver {
 public:
  virtual ~DecodeObserver() = default;
  virtual void on_read(std::size_t patch, std::size_t row, std::size_t col, std::size_t target_row,
                       std::size_t target_col) = 0;
};

struct DecodeOptions {
  // Worker threads for patch-parallel decoding; 0 decodes sequentially.
  std::size_t threads = 0;
  // When set, decoding is sequential and every context read is reported.
  DecodeObserver* observer = nullptr;
};

Image decompress(const CodeContainer& container, const WeightBundle& model,
                 const DecodeOptions& options = {});

// The symbol records a coder would see for `image`, in coding order.
std::vector<SymbolRecord> symbol_records(const Image& image, const WeightBundle& model);

// Sum of -log2(freq / 2^16) over all subpixels, per patch of `grid`.
std::vector<double> ideal_codelength_per_patch(const Image& image, const WeightBundle& model,
                                               PatchGrid grid);
double ideal_codelength(const Image& image, const WeightBundle& model, PatchGrid grid = {});

// Interleaved rANS over a batch of whole images, one lane per image.
InterleavedStream compress_batch(std::span<const Image> images, const WeightBundle& model);
std::vector<Image> decompress_batch(const Bitstream& stream, std::span<const ImageShape> shapes,
                                    const WeightBundle& model);

}  // namespace nelloc
