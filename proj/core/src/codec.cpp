#include "nelloc/codec.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstring>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "nelloc/error.hpp"

namespace nelloc {

namespace {

constexpr char kContainerMagic[4] = {'N', 'L', 'C', '1'};
constexpr std::size_t kMaxDim = 65535;

void check_model(const WeightBundle& model, std::size_t channels) {
  if (model.spec.variant != Variant::Local) {
    throw Error(ErrorCode::UnsupportedVariant, "compression requires a local model");
  }
  if (model.spec.color_channels != channels) {
    throw Error(ErrorCode::DimensionMismatch, "image has " + std::to_string(channels) +
                                                  " channels, model expects " +
                                                  std::to_string(model.spec.color_channels));
  }
}

void check_grid(std::size_t height, std::size_t width, PatchGrid grid) {
  if (grid.rows == 0 || grid.cols == 0 || grid.rows > height || grid.cols > width) {
    throw Error(ErrorCode::InvalidArgument,
                "patch grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                    " does not fit a " + std::to_string(height) + "x" + std::to_string(width) + " image");
  }
}

std::vector<SymbolRecord> records_from_grid(const MixtureGrid& params, const Image& image) {
  std::vector<SymbolRecord> records;
  records.reserve(image.dims());
  std::array<std::uint8_t, 3> pixel{};
  for (std::size_t i = 0; i < image.height(); ++i) {
    for (std::size_t j = 0; j < image.width(); ++j) {
      const MixtureParams p = params.at(i, j);
      for (std::size_t c = 0; c < image.channels(); ++c) {
        pixel[c] = image.at(i, j, c);
        records.push_back({pixel[c], quantized_pmf(p, c, std::span<const std::uint8_t>(pixel).first(c))});
      }
    }
  }
  return records;
}

// Autoregressive decoding state of one patch: supplies the table for the next
// subpixel from already decoded pixels and absorbs the decoded symbol.
class PatchDecoder {
 public:
  PatchDecoder(const WeightBundle& model, std::size_t height, std::size_t width, std::size_t patch,
               DecodeObserver* observer)
      : model_(model),
        image_(height, width, model.spec.color_channels),
        patch_(patch),
        observer_(observer) {}

  QuantizedPmf next_pmf() {
    const std::size_t channels = image_.channels();
    const std::size_t pixel_index = index_ / channels;
    const std::size_t c = index_ % channels;
    if (c == 0) {
      const std::size_t i = pixel_index / image_.width();
      const std::size_t j = pixel_index % image_.width();
      const auto window = gather_context(
          model_.spec.horizon, channels, image_.height(), image_.width(), i, j,
          [&](std::size_t r, std::size_t col, std::size_t ch) {
            if (observer_ != nullptr && ch == 0) observer_->on_read(patch_, r, col, i, j);
            return image_.at(r, col, ch);
          });
      params_ = conditional_params(model_, window);
    }
    return quantized_pmf(params_, c, std::span<const std::uint8_t>(pixel_).first(c));
  }

  void push(std::uint8_t symbol) {
    const std::size_t channels = image_.channels();
    const std::size_t c = index_ % channels;
    pixel_[c] = symbol;
    image_.values()[index_] = symbol;
    ++index_;
  }

  std::size_t count() const { return image_.dims(); }
  Image& image() { return image_; }

 private:
  const WeightBundle& model_;
  Image image_;
  std::size_t patch_;
  DecodeObserver* observer_;
  std::size_t index_ = 0;
  MixtureParams params_;
  std::array<std::uint8_t, 3> pixel_{};
};

template <typename Decoder>
void run_decoder(Decoder& dec, PatchDecoder& state) {
  for (std::size_t n = 0; n < state.count(); ++n) state.push(dec.decode(state.next_pmf()));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t pos) {
  T v = 0;
  for (std::size_t s = 0; s < sizeof(T); ++s) v |= static_cast<T>(static_cast<T>(in[pos + s]) << (8 * s));
  return v;
}

}  // namespace

const char* coder_name(CoderKind kind) {
  switch (kind) {
    case CoderKind::Arithmetic: return "ac";
    case CoderKind::Rans: return "rans";
    case CoderKind::InterleavedRans: return "ians";
  }
  return "unknown";
}

PatchRect patch_rect(std::size_t height, std::size_t width, PatchGrid grid, std::size_t p) {
  check_grid(height, width, grid);
  if (p >= grid.count()) throw Error(ErrorCode::InvalidArgument, "patch index out of range");
  const std::size_t r = p / grid.cols;
  const std::size_t c = p % grid.cols;
  const std::size_t row_step = height / grid.rows;
  const std::size_t col_step = width / grid.cols;
  PatchRect rect{r * row_step, c * col_step, row_step, col_step};
  if (r + 1 == grid.rows) rect.height = height - rect.row;
  if (c + 1 == grid.cols) rect.width = width - rect.col;
  return rect;
}

double CodeContainer::bpd() const {
  return 8.0 * static_cast<double>(size()) /
         (static_cast<double>(height) * static_cast<double>(width) * static_cast<double>(channels));
}

std::vector<std::uint8_t> serialize(const CodeContainer& container) {
  if (container.payload_lengths.size() != container.grid.count()) {
    throw Error(ErrorCode::InvalidArgument, "payload length table does not match the patch grid");
  }
  std::vector<std::uint8_t> out(std::begin(kContainerMagic), std::end(kContainerMagic));
  out.reserve(container.size());
  out.push_back(kContainerVersion);
  out.push_back(static_cast<std::uint8_t>(container.coder));
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(container.fingerprint >> s));
  put_u16(out, container.height);
  put_u16(out, container.width);
  out.push_back(container.channels);
  out.push_back(container.grid.rows);
  out.push_back(container.grid.cols);
  for (std::uint32_t len : container.payload_lengths) put_u32(out, len);
  out.insert(out.end(), container.payload.begin(), container.payload.end());
  return out;
}

CodeContainer parse_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kContainerMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not a compressed container (expected magic NLC1)");
  }
  if (bytes.size() < 21) throw Error(ErrorCode::Truncated, "container header is incomplete");
  if (bytes[4] != kContainerVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "container version " + std::to_string(bytes[4]));
  }
  CodeContainer c;
  if (bytes[5] > 2) throw Error(ErrorCode::CorruptHeader, "unknown coder id " + std::to_string(bytes[5]));
  c.coder = static_cast<CoderKind>(bytes[5]);
  c.fingerprint = get_le<std::uint64_t>(bytes, 6);
  c.height = get_le<std::uint16_t>(bytes, 14);
  c.width = get_le<std::uint16_t>(bytes, 16);
  c.channels = bytes[18];
  c.grid = {bytes[19], bytes[20]};
  if (c.height == 0 || c.width == 0 || (c.channels != 1 && c.channels != 3)) {
    throw Error(ErrorCode::CorruptHeader, "invalid image shape in container header");
  }
  if (c.grid.rows == 0 || c.grid.cols == 0 || c.grid.rows > c.height || c.grid.cols > c.width) {
    throw Error(ErrorCode::CorruptHeader, "invalid patch grid in container header");
  }
  const std::size_t patches = c.grid.count();
  if (bytes.size() < 21 + 4 * patches) throw Error(ErrorCode::Truncated, "container length table is incomplete");
  std::size_t total = 0;
  for (std::size_t p = 0; p < patches; ++p) {
    c.payload_lengths.push_back(get_le<std::uint32_t>(bytes, 21 + 4 * p));
    total += c.payload_lengths.back();
  }
  const std::size_t header = 21 + 4 * patches;
  if (bytes.size() - header < total) {
    throw Error(ErrorCode::Truncated, "container payload is shorter than its length table");
  }
  if (bytes.size() - header > total) {
    throw Error(ErrorCode::CorruptHeader, "container has trailing bytes after its payload");
  }
  c.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return c;
}

std::vector<SymbolRecord> symbol_records(const Image& image, const WeightBundle& model) {
  check_model(model, image.channels());
  return records_from_grid(forward(model, image), image);
}

CodeContainer compress(const Image& image, const WeightBundle& model, CoderKind coder, PatchGrid grid) {
  check_model(model, image.channels());
  if (image.height() > kMaxDim || image.width() > kMaxDim) {
    throw Error(ErrorCode::ImageTooLarge, std::to_string(image.height()) + "x" +
                                              std::to_string(image.width()) +
                                              " exceeds the 65535 limit of the container");
  }
  check_grid(image.height(), image.width(), grid);

  CodeContainer out;
  out.coder = coder;
  out.fingerprint = fingerprint(model);
  out.height = static_cast<std::uint16_t>(image.height());
  out.width = static_cast<std::uint16_t>(image.width());
  out.channels = static_cast<std::uint8_t>(image.channels());
  out.grid = grid;

  std::vector<std::vector<SymbolRecord>> lanes;
  lanes.reserve(grid.count());
  for (std::size_t p = 0; p < grid.count(); ++p) {
    const PatchRect r = patch_rect(image.height(), image.width(), grid, p);
    lanes.push_back(symbol_records(image.crop(r.row, r.col, r.height, r.width), model));
  }

  if (coder == CoderKind::InterleavedRans) {
    InterleavedStream s = ians_encode(lanes);
    out.payload_lengths = std::move(s.lane_bytes);
    out.payload = std::move(s.stream.bytes);
    return out;
  }
  for (const auto& records : lanes) {
    const Bitstream s = coder == CoderKind::Arithmetic ? ac_encode(records) : rans_encode(records);
    out.payload_lengths.push_back(static_cast<std::uint32_t>(s.bytes.size()));
    out.payload.insert(out.payload.end(), s.bytes.begin(), s.bytes.end());
  }
  return out;
}

Image decompress(const CodeContainer& container, const WeightBundle& model, const DecodeOptions& options) {
  if (container.fingerprint != fingerprint(model)) {
    throw Error(ErrorCode::FingerprintMismatch, "container was produced with a different model");
  }
  check_model(model, container.channels);
  const std::size_t height = container.height;
  const std::size_t width = container.width;
  const std::size_t patches = container.grid.count();
  if (container.payload_lengths.size() != patches) {
    throw Error(ErrorCode::CorruptHeader, "payload length table does not match the patch grid");
  }
  check_grid(height, width, container.grid);
  Image image(height, width, container.channels);

  std::vector<PatchDecoder> states;
  states.reserve(patches);
  for (std::size_t p = 0; p < patches; ++p) {
    const PatchRect r = patch_rect(height, width, container.grid, p);
    states.emplace_back(model, r.height, r.width, p, options.observer);
  }

  if (container.coder == CoderKind::InterleavedRans) {
    Bitstream stream{container.payload, container.payload.size() * 8};
    std::vector<std::size_t> counts;
    for (const auto& s : states) counts.push_back(s.count());
    InterleavedRansDecoder dec(stream, counts);
    while (!dec.done()) {
      PatchDecoder& s = states[dec.next_lane()];
      s.push(dec.decode(s.next_pmf()));
    }
    dec.finish();
    if (dec.lane_bytes() != container.payload_lengths) {
      throw Error(ErrorCode::CorruptHeader, "per-lane byte counts disagree with the length table");
    }
  } else {
    std::vector<std::size_t> offsets(patches + 1, 0);
    for (std::size_t p = 0; p < patches; ++p) offsets[p + 1] = offsets[p] + container.payload_lengths[p];
    if (offsets[patches] != container.payload.size()) {
      throw Error(ErrorCode::CorruptHeader, "payload size disagrees with the length table");
    }
    auto decode_patch = [&](std::size_t p) {
      Bitstream stream;
      stream.bytes.assign(container.payload.begin() + static_cast<std::ptrdiff_t>(offsets[p]),
                          container.payload.begin() + static_cast<std::ptrdiff_t>(offsets[p + 1]));
      stream.bit_length = stream.bytes.size() * 8;
      if (container.coder == CoderKind::Arithmetic) {
        ArithmeticDecoder dec(stream);
        run_decoder(dec, states[p]);
      } else {
        RansDecoder dec(stream);
        run_decoder(dec, states[p]);
        dec.finish();
      }
    };

    const std::size_t workers =
        options.observer != nullptr ? 0 : std::min(options.threads, patches);
    if (workers <= 1) {
      for (std::size_t p = 0; p < patches; ++p) decode_patch(p);
    } else {
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
          for (std::size_t p = next++; p < patches; p = next++) {
            try {
              decode_patch(p);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
      for (auto& th : pool) th.join();
      if (failure) std::rethrow_exception(failure);
    }
  }

  for (std::size_t p = 0; p < patches; ++p) {
    const PatchRect r = patch_rect(height, width, container.grid, p);
    image.paste(states[p].image(), r.row, r.col);
  }
  return image;
}

std::vector<double> ideal_codelength_per_patch(const Image& image, const WeightBundle& model,
                                               PatchGrid grid) {
  check_grid(image.height(), image.width(), grid);
  std::vector<double> bits;
  for (std::size_t p = 0; p < grid.count(); ++p) {
    const PatchRect r = patch_rect(image.height(), image.width(), grid, p);
    double total = 0.0;
    for (const auto& rec : symbol_records(image.crop(r.row, r.col, r.height, r.width), model)) {
      total += rec.pmf.codelength_bits(rec.symbol);
    }
    bits.push_back(total);
  }
  return bits;
}

double ideal_codelength(const Image& image, const WeightBundle& model, PatchGrid grid) {
  double total = 0.0;
  for (double b : ideal_codelength_per_patch(image, model, grid)) total += b;
  return total;
}

InterleavedStream compress_batch(std::span<const Image> images, const WeightBundle& model) {
  std::vector<std::vector<SymbolRecord>> lanes;
  for (const auto& img : images) lanes.push_back(symbol_records(img, model));
  return ians_encode(lanes);
}

std::vector<Image> decompress_batch(const Bitstream& stream, std::span<const ImageShape> shapes,
                                    const WeightBundle& model) {
  std::vector<PatchDecoder> states;
  std::vector<std::size_t> counts;
  states.reserve(shapes.size());
  for (std::size_t n = 0; n < shapes.size(); ++n) {
    check_model(model, shapes[n].channels);
    states.emplace_back(model, shapes[n].height, shapes[n].width, n, nullptr);
    counts.push_back(states.back().count());
  }
  InterleavedRansDecoder dec(stream, counts);
  while (!dec.done()) {
    PatchDecoder& s = states[dec.next_lane()];
    s.push(dec.decode(s.next_pmf()));
  }
  dec.finish();
  std::vector<Image> out;
  for (auto& s : states) out.push_back(std::move(s.image()));
  return out;
}

}  // namespace nelloc
