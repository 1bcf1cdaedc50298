#include "nelloc/tensor.hpp"

#include <algorithm>
#include <string>

#include "nelloc/error.hpp"

namespace nelloc {

Tensor4::Tensor4(std::size_t batch, std::size_t channels, std::size_t height, std::size_t width,
                 float fill)
    : dims_{batch, channels, height, width}, data_(batch * channels * height * width, fill) {}

ConvKernel::ConvKernel(std::size_t out, std::size_t in, std::size_t k, MaskKind kind,
                       std::size_t groups)
    : out_channels(out),
      in_channels(in),
      size(k),
      weights(out * in * k * k, 0.0f),
      bias(out, 0.0f),
      mask_kind(kind),
      mask_groups(groups) {
  validate();
}

void ConvKernel::validate() const {
  if (size % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "kernel size must be odd, got " + std::to_string(size));
  }
  if (mask_groups == 0) throw Error(ErrorCode::InvalidArgument, "mask_groups must be positive");
  if (weights.size() != weight_count()) {
    throw Error(ErrorCode::ShapeMismatch, "kernel weights: expected " +
                                              std::to_string(weight_count()) + " values, got " +
                                              std::to_string(weights.size()));
  }
  if (bias.size() != out_channels) {
    throw Error(ErrorCode::ShapeMismatch, "kernel bias: expected " + std::to_string(out_channels) +
                                              " values, got " + std::to_string(bias.size()));
  }
}

bool mask_allows(MaskKind kind, std::size_t groups, std::size_t out_channels,
                 std::size_t in_channels, std::size_t o, std::size_t c, std::size_t ky,
                 std::size_t kx, std::size_t k) {
  if (kind == MaskKind::None) return true;
  const std::size_t centre = k / 2;
  if (ky < centre) return true;
  if (ky > centre) return false;
  if (kx < centre) return true;
  if (kx > centre) return false;
  const std::size_t g_out = o * groups / out_channels;
  const std::size_t g_in = c * groups / in_channels;
  return kind == MaskKind::A ? g_in < g_out : g_in <= g_out;
}

std::vector<std::uint8_t> ConvKernel::mask() const {
  std::vector<std::uint8_t> m(weight_count());
  std::size_t n = 0;
  for (std::size_t o = 0; o < out_channels; ++o)
    for (std::size_t c = 0; c < in_channels; ++c)
      for (std::size_t ky = 0; ky < size; ++ky)
        for (std::size_t kx = 0; kx < size; ++kx)
          m[n++] = mask_allows(mask_kind, mask_groups, out_channels, in_channels, o, c, ky, kx,
                               size)
                       ? 1
                       : 0;
  return m;
}

namespace {

void check_conv_dims(const Tensor4& input, const ConvKernel& kernel) {
  kernel.validate();
  if (input.channels() != kernel.in_channels) {
    throw Error(ErrorCode::DimensionMismatch,
                "conv2d: channel axis of input is " + std::to_string(input.channels()) +
                    " but kernel expects " + std::to_string(kernel.in_channels));
  }
}

// Accumulates one output value. Taps that fall outside the input read as zero
// but are still accumulated so windowed and whole-image evaluation perform the
// same sequence of floating point operations. Masked taps are skipped; the
// mask only ever removes a suffix of the raster-ordered taps of one channel.
inline float accumulate(const Tensor4& input, const ConvKernel& kernel, std::size_t b,
                        std::size_t o, std::size_t i, std::size_t j) {
  const std::size_t k = kernel.size;
  const std::size_t centre = k / 2;
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(centre);
  const auto height = static_cast<std::ptrdiff_t>(input.height());
  const auto width = static_cast<std::ptrdiff_t>(input.width());
  const bool masked = kernel.mask_kind != MaskKind::None;
  float acc = kernel.bias[o];
  const float* w = kernel.weights.data() + o * kernel.in_channels * k * k;
  for (std::size_t c = 0; c < kernel.in_channels; ++c) {
    const float* plane = input.data().data() + (b * input.channels() + c) * input.height() * input.width();
    const bool centre_open = mask_allows(kernel.mask_kind, kernel.mask_groups, kernel.out_channels,
                                         kernel.in_channels, o, c, centre, centre, k);
    for (std::size_t ky = 0; ky < k; ++ky, w += k) {
      std::size_t kx_end = k;
      if (masked && ky > centre) continue;
      if (masked && ky == centre) kx_end = centre + (centre_open ? 1 : 0);
      const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(ky) - half;
      if (y < 0 || y >= height) {
        for (std::size_t kx = 0; kx < kx_end; ++kx) acc = acc + w[kx] * 0.0f;
        continue;
      }
      const float* row = plane + static_cast<std::size_t>(y) * input.width();
      for (std::size_t kx = 0; kx < kx_end; ++kx) {
        const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(j) + static_cast<std::ptrdiff_t>(kx) - half;
        const float v = x >= 0 && x < width ? row[x] : 0.0f;
        acc = acc + w[kx] * v;
      }
    }
  }
  return acc;
}

}  // namespace

// Whole-image path: taps outermost, pixels innermost over a zero-padded copy of
// the input. Every output still sees bias, then channel, row and column taps in
// the same order as `accumulate`, so both paths agree bit for bit.
Tensor4 conv2d_masked(const Tensor4& input, const ConvKernel& kernel) {
  check_conv_dims(input, kernel);
  const std::size_t k = kernel.size, centre = k / 2;
  const std::size_t H = input.height(), W = input.width(), C = input.channels();
  const std::size_t PH = H + 2 * centre, PW = W + 2 * centre;
  const bool masked = kernel.mask_kind != MaskKind::None;

  Tensor4 out(input.batch(), kernel.out_channels, H, W);
  if (k == 1) {
    // Pointwise: no padding, and output channels innermost so a single pixel
    // still keeps independent accumulators in flight.
    const std::size_t P = H * W;
    for (std::size_t b = 0; b < input.batch(); ++b) {
      float* dst = out.data().data() + b * kernel.out_channels * P;
      const float* src = input.data().data() + b * C * P;
      for (std::size_t o = 0; o < kernel.out_channels; ++o) std::fill(dst + o * P, dst + (o + 1) * P, kernel.bias[o]);
      // A single mask group makes the centre tap all-or-nothing.
      const bool uniform = !masked || kernel.mask_groups == 1;
      const bool open = !masked || kernel.mask_kind == MaskKind::B;
      for (std::size_t c = 0; c < C; ++c) {
        if (uniform && !open) break;
        for (std::size_t o = 0; o < kernel.out_channels; ++o) {
          if (!uniform && !mask_allows(kernel.mask_kind, kernel.mask_groups, kernel.out_channels, C, o, c, 0, 0, 1)) {
            continue;
          }
          const float wv = kernel.weights[o * C + c];
          float* d = dst + o * P;
          const float* x = src + c * P;
          for (std::size_t p = 0; p < P; ++p) d[p] = d[p] + wv * x[p];
        }
      }
    }
    return out;
  }

  std::vector<float> padded(C * PH * PW, 0.0f);
  for (std::size_t b = 0; b < input.batch(); ++b) {
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < H; ++i) {
        const float* src = input.data().data() + ((b * C + c) * H + i) * W;
        std::copy(src, src + W, padded.begin() + (c * PH + i + centre) * PW + centre);
      }
    for (std::size_t o = 0; o < kernel.out_channels; ++o) {
      float* acc = out.data().data() + (b * kernel.out_channels + o) * H * W;
      std::fill(acc, acc + H * W, kernel.bias[o]);
      const float* w = kernel.weights.data() + o * C * k * k;
      for (std::size_t c = 0; c < C; ++c) {
        const bool centre_open =
            mask_allows(kernel.mask_kind, kernel.mask_groups, kernel.out_channels, C, o, c, centre, centre, k);
        for (std::size_t ky = 0; ky < k; ++ky, w += k) {
          if (masked && ky > centre) continue;
          const std::size_t kx_end = masked && ky == centre ? centre + (centre_open ? 1 : 0) : k;
          for (std::size_t kx = 0; kx < kx_end; ++kx) {
            const float wv = w[kx];
            for (std::size_t i = 0; i < H; ++i) {
              const float* src = padded.data() + (c * PH + i + ky) * PW + kx;
              float* dst = acc + i * W;
              for (std::size_t j = 0; j < W; ++j) dst[j] = dst[j] + wv * src[j];
            }
          }
        }
      }
    }
  }
  return out;
}

void conv2d_masked_at(const Tensor4& input, const ConvKernel& kernel, std::size_t b,
                      std::size_t i, std::size_t j, std::span<float> out) {
  check_conv_dims(input, kernel);
  if (out.size() != kernel.out_channels) {
    throw Error(ErrorCode::DimensionMismatch, "conv2d_masked_at: output span has " +
                                                  std::to_string(out.size()) + " slots, kernel has " +
                                                  std::to_string(kernel.out_channels) +
                                                  " output channels");
  }
  if (b >= input.batch() || i >= input.height() || j >= input.width()) {
    throw Error(ErrorCode::DimensionMismatch, "conv2d_masked_at: position outside input");
  }
  for (std::size_t o = 0; o < kernel.out_channels; ++o) out[o] = accumulate(input, kernel, b, o, i, j);
}

Tensor4 relu(const Tensor4& input) {
  Tensor4 out = input;
  relu_inplace(out);
  return out;
}

void relu_inplace(Tensor4& t) {
  for (float& v : t.data()) v = v > 0.0f ? v : 0.0f;
}

Tensor4 add(const Tensor4& a, const Tensor4& b) {
  static constexpr const char* kAxis[] = {"batch", "channel", "height", "width"};
  for (std::size_t axis = 0; axis < 4; ++axis) {
    if (a.dims()[axis] != b.dims()[axis]) {
      throw Error(ErrorCode::DimensionMismatch,
                  std::string("add: ") + kAxis[axis] + " axis differs (" +
                      std::to_string(a.dims()[axis]) + " vs " + std::to_string(b.dims()[axis]) + ")");
    }
  }
  Tensor4 out = a;
  auto dst = out.data();
  auto src = b.data();
  for (std::size_t n = 0; n < dst.size(); ++n) dst[n] = dst[n] + src[n];
  return out;
}

}  // namespace nelloc
