#include "nelloc/image.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include "nelloc/error.hpp"

namespace nelloc {

Image::Image(std::size_t height, std::size_t width, std::size_t channels, std::uint8_t fill)
    : Image(height, width, channels, std::vector<std::uint8_t>(height * width * channels, fill)) {}

Image::Image(std::size_t height, std::size_t width, std::size_t channels,
             std::vector<std::uint8_t> values)
    : height_(height), width_(width), channels_(channels), values_(std::move(values)) {
  if (height == 0 || width == 0) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::InvalidArgument,
                "image must have 1 or 3 channels, got " + std::to_string(channels));
  }
  if (values_.size() != height * width * channels) {
    throw Error(ErrorCode::DimensionMismatch,
                "image value array has " + std::to_string(values_.size()) + " entries, expected " +
                    std::to_string(height * width * channels));
  }
}

Image Image::crop(std::size_t row, std::size_t col, std::size_t rows, std::size_t cols) const {
  if (row + rows > height_ || col + cols > width_) {
    throw Error(ErrorCode::InvalidArgument, "crop outside image bounds");
  }
  Image out(rows, cols, channels_);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      for (std::size_t c = 0; c < channels_; ++c) out.at(i, j, c) = at(row + i, col + j, c);
  return out;
}

void Image::paste(const Image& patch, std::size_t row, std::size_t col) {
  if (patch.channels() != channels_ || row + patch.height() > height_ ||
      col + patch.width() > width_) {
    throw Error(ErrorCode::InvalidArgument, "paste outside image bounds");
  }
  for (std::size_t i = 0; i < patch.height(); ++i)
    for (std::size_t j = 0; j < patch.width(); ++j)
      for (std::size_t c = 0; c < channels_; ++c) at(row + i, col + j, c) = patch.at(i, j, c);
}

std::vector<std::uint8_t> encode_pnm(const Image& image) {
  const std::string header = std::string(image.channels() == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.values().begin(), image.values().end());
  return out;
}

namespace {

class PnmScanner {
 public:
  explicit PnmScanner(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t next_number() {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1u << 24)) throw Error(ErrorCode::CorruptHeader, "PNM header value too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw Error(ErrorCode::CorruptHeader, "PNM header: expected a number");
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void single_space() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw Error(ErrorCode::CorruptHeader, "PNM header: missing separator before raster");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  static bool is_space(std::uint8_t b) {
    return b == ' ' || b == '\t' || b == '\n' || b == '\r' || b == '\v' || b == '\f';
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

Image decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(ErrorCode::BadMagic, "not a binary PNM (P5/P6) file");
  }
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  PnmScanner scan(bytes);
  const std::size_t width = scan.next_number();
  const std::size_t height = scan.next_number();
  const std::size_t maxval = scan.next_number();
  scan.single_space();
  if (maxval != 255) {
    throw Error(ErrorCode::CorruptHeader, "only maxval 255 is supported, got " + std::to_string(maxval));
  }
  if (width == 0 || height == 0) throw Error(ErrorCode::CorruptHeader, "PNM with zero dimension");
  const std::size_t count = width * height * channels;
  if (bytes.size() - scan.pos() < count) {
    throw Error(ErrorCode::Truncated, "PNM raster is shorter than " + std::to_string(count) + " bytes");
  }
  auto first = bytes.begin() + static_cast<std::ptrdiff_t>(scan.pos());
  return Image(height, width, channels,
               std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(count)));
}

Image read_pnm(const std::filesystem::path& path) { return decode_pnm(read_file(path)); }

void write_pnm(const std::filesystem::path& path, const Image& image) {
  write_file(path, encode_pnm(image));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace nelloc
