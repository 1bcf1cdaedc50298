#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nelloc/image.hpp"
#include "nelloc/mixture.hpp"
#include "nelloc/tensor.hpp"

namespace nelloc {

enum class Variant : std::uint32_t { Local = 0, Full = 1 };

struct ModelSpec {
  Variant variant = Variant::Local;
  std::uint32_t horizon = 3;
  std::uint32_t residual_blocks = 0;
  std::uint32_t hidden_channels = 256;
  std::uint32_t mixtures = 10;
  std::uint32_t color_channels = 3;

  std::size_t kernel_size() const { return 2 * horizon + 1; }
  std::size_t output_channels() const { return mixture_param_count(mixtures, color_channels); }
  // Kernel size of the middle convolution in each residual block.
  std::size_t block_kernel_size() const { return variant == Variant::Full ? 3 : 1; }

  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

// Layer shapes in network order: first masked-A conv, three convs per residual
// block, then the two output convs.
std::vector<ConvKernel> make_layers(const ModelSpec& spec);

struct WeightBundle {
  ModelSpec spec;
  std::vector<ConvKernel> layers;

  // All weights and biases zero.
  static WeightBundle zeros(const ModelSpec& spec);
  // Weights drawn uniformly from [-scale/sqrt(fan_in), scale/sqrt(fan_in)].
  static WeightBundle random(const ModelSpec& spec, std::uint64_t seed, float scale = 1.0f);

  std::size_t parameter_count() const;
  // Checks every layer against the shapes implied by `spec`.
  void validate() const;
};

std::vector<std::uint8_t> save_weights(const WeightBundle& bundle);
WeightBundle load_weights(std::span<const std::uint8_t> bytes);

// 64-bit FNV-1a of the serialized weight file.
std::uint64_t fingerprint(std::span<const std::uint8_t> weight_file);
std::uint64_t fingerprint(const WeightBundle& bundle);

// Per-pixel network outputs for a whole image.
class MixtureGrid {
 public:
  MixtureGrid(std::size_t height, std::size_t width, std::size_t mixtures, std::size_t channels);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  MixtureParams at(std::size_t i, std::size_t j) const;
  std::span<float> raw(std::size_t i, std::size_t j);

 private:
  std::size_t height_, width_, mixtures_, channels_, stride_;
  std::vector<float> values_;
};

Tensor4 to_network_input(const Image& image);

// Teacher-forced evaluation of the predictive parameters of every pixel.
MixtureGrid forward(const WeightBundle& model, const Image& image);

// Zero-padded causal neighbourhood of one pixel: rows [i-h, i] and columns
// [j-h, j+h], already rescaled to [-1, 1]. Entries at or after the target pixel
// and outside the image are zero.
class ContextWindow {
 public:
  ContextWindow(std::size_t horizon, std::size_t channels);

  std::size_t horizon() const { return horizon_; }
  std::size_t channels() const { return tensor_.channels(); }
  // (dy, dx) relative to the target: dy in [-h, 0], dx in [-h, h].
  void set(std::ptrdiff_t dy, std::ptrdiff_t dx, std::size_t c, std::uint8_t value);
  const Tensor4& tensor() const { return tensor_; }

 private:
  std::size_t horizon_;
  Tensor4 tensor_;
};

// True when (row, col) is one of the pixels the local model may condition on
// when predicting (target_row, target_col).
bool in_causal_window(std::size_t horizon, std::ptrdiff_t row, std::ptrdiff_t col,
                      std::ptrdiff_t target_row, std::ptrdiff_t target_col);

// Fills the window for pixel (i, j). `read(row, col, c)` is only called for
// in-image positions inside the causal window.
template <typename Reader>
ContextWindow gather_context(std::size_t horizon, std::size_t channels, std::size_t height,
                             std::size_t width, std::size_t i, std::size_t j, Reader&& read) {
  ContextWindow window(horizon, channels);
  const auto h = static_cast<std::ptrdiff_t>(horizon);
  for (std::ptrdiff_t dy = -h; dy <= 0; ++dy) {
    const std::ptrdiff_t row = static_cast<std::ptrdiff_t>(i) + dy;
    if (row < 0) continue;
    const std::ptrdiff_t dx_end = dy == 0 ? 0 : h + 1;
    for (std::ptrdiff_t dx = -h; dx < dx_end; ++dx) {
      const std::ptrdiff_t col = static_cast<std::ptrdiff_t>(j) + dx;
      if (col < 0 || col >= static_cast<std::ptrdiff_t>(width)) continue;
      for (std::size_t c = 0; c < channels; ++c) {
        window.set(dy, dx, c, read(static_cast<std::size_t>(row), static_cast<std::size_t>(col), c));
      }
    }
  }
  (void)height;
  return window;
}

ContextWindow gather_context(const Image& image, std::size_t horizon, std::size_t i, std::size_t j);

// Predictive parameters of a single pixel from its causal window. Bit-identical
// to forward(model, image).at(i, j) for any image with the same window.
MixtureParams conditional_params(const WeightBundle& model, const ContextWindow& context);

// Raster-order ancestral sampling from the quantized predictive tables.
Image sample(const WeightBundle& model, std::size_t height, std::size_t width, std::uint64_t seed);

}  // namespace nelloc
