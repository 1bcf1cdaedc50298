#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nelloc {

// Dense (batch, channels, height, width) tensor of 32-bit reals, row-major.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t batch, std::size_t channels, std::size_t height, std::size_t width,
          float fill = 0.0f);

  std::size_t batch() const { return dims_[0]; }
  std::size_t channels() const { return dims_[1]; }
  std::size_t height() const { return dims_[2]; }
  std::size_t width() const { return dims_[3]; }
  const std::array<std::size_t, 4>& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  float& at(std::size_t b, std::size_t c, std::size_t i, std::size_t j) {
    return data_[index(b, c, i, j)];
  }
  float at(std::size_t b, std::size_t c, std::size_t i, std::size_t j) const {
    return data_[index(b, c, i, j)];
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool operator==(const Tensor4&) const = default;

 private:
  std::size_t index(std::size_t b, std::size_t c, std::size_t i, std::size_t j) const {
    return ((b * dims_[1] + c) * dims_[2] + i) * dims_[3] + j;
  }

  std::array<std::size_t, 4> dims_{0, 0, 0, 0};
  std::vector<float> data_;
};

enum class MaskKind : std::uint8_t { None, A, B };

// Convolution parameters with an optional autoregressive mask.
//
// Taps strictly above the centre row and taps to the left of the centre are
// always allowed under mask A/B; taps to the right of the centre and below it
// are always removed. At the centre tap channels are split into `mask_groups`
// contiguous blocks (one per colour): mask A connects input group g_in to
// output group g_out only when g_in < g_out, mask B when g_in <= g_out. With a
// single group mask A therefore removes the centre entirely and mask B keeps it.
struct ConvKernel {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t size = 1;           // k, odd
  std::vector<float> weights;     // (out, in, k, k)
  std::vector<float> bias;        // (out)
  MaskKind mask_kind = MaskKind::None;
  std::size_t mask_groups = 1;

  ConvKernel() = default;
  ConvKernel(std::size_t out, std::size_t in, std::size_t k, MaskKind kind = MaskKind::None,
             std::size_t groups = 1);

  std::size_t weight_count() const { return out_channels * in_channels * size * size; }

  // Materialized binary mask in (out, in, k, k) order, 1 = tap kept.
  std::vector<std::uint8_t> mask() const;

  // Throws if the array lengths disagree with the declared shape.
  void validate() const;
};

bool mask_allows(MaskKind kind, std::size_t groups, std::size_t out_channels,
                 std::size_t in_channels, std::size_t o, std::size_t c, std::size_t ky,
                 std::size_t kx, std::size_t k);

// Zero-padded "same" convolution. Accumulation order per output is fixed:
// bias, then input channel, then kernel row, then kernel column.
Tensor4 conv2d_masked(const Tensor4& input, const ConvKernel& kernel);

// Evaluates a single output position of conv2d_masked for every output channel,
// bit-identical to the corresponding entry of the full convolution.
void conv2d_masked_at(const Tensor4& input, const ConvKernel& kernel, std::size_t b,
                      std::size_t i, std::size_t j, std::span<float> out);

Tensor4 relu(const Tensor4& input);
void relu_inplace(Tensor4& t);
Tensor4 add(const Tensor4& a, const Tensor4& b);

}  // namespace nelloc
