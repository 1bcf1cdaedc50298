#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace nelloc {

// H x W x C grid of 8-bit intensities stored pixel-interleaved (row, column, channel).
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, std::size_t channels, std::uint8_t fill = 0);
  Image(std::size_t height, std::size_t width, std::size_t channels,
        std::vector<std::uint8_t> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  // Number of subpixels, H * W * C.
  std::size_t dims() const { return values_.size(); }

  std::uint8_t& at(std::size_t i, std::size_t j, std::size_t c) {
    return values_[(i * width_ + j) * channels_ + c];
  }
  std::uint8_t at(std::size_t i, std::size_t j, std::size_t c) const {
    return values_[(i * width_ + j) * channels_ + c];
  }

  std::span<const std::uint8_t> values() const { return values_; }
  std::span<std::uint8_t> values() { return values_; }

  // Copy of rows [row, row + rows) and columns [col, col + cols).
  Image crop(std::size_t row, std::size_t col, std::size_t rows, std::size_t cols) const;
  void paste(const Image& patch, std::size_t row, std::size_t col);

  bool operator==(const Image&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<std::uint8_t> values_;
};

// Binary PNM: P5 (grayscale) or P6 (RGB), maxval 255.
std::vector<std::uint8_t> encode_pnm(const Image& image);
Image decode_pnm(std::span<const std::uint8_t> bytes);

Image read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Image& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace nelloc
