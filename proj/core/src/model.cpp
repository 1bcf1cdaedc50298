#include "nelloc/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "nelloc/error.hpp"

namespace nelloc {

namespace {

constexpr char kWeightMagic[4] = {'N', 'L', 'W', '1'};
constexpr std::uint8_t kWeightVersion = 1;
constexpr std::size_t kWeightHeaderSize = 4 + 1 + 6 * 4;

void check_finite(const Tensor4& t, const char* where) {
  for (float v : t.data()) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::CorruptModel, std::string("non-finite activation after ") + where);
    }
  }
}

// Runs every layer after the first. Shared by whole-image and single-pixel
// evaluation so both perform identical arithmetic.
Tensor4 run_tail(const WeightBundle& model, Tensor4 h) {
  const auto& layers = model.layers;
  relu_inplace(h);
  std::size_t n = 1;
  for (std::uint32_t block = 0; block < model.spec.residual_blocks; ++block) {
    Tensor4 t = conv2d_masked(h, layers[n++]);
    relu_inplace(t);
    t = conv2d_masked(t, layers[n++]);
    relu_inplace(t);
    t = conv2d_masked(t, layers[n++]);
    relu_inplace(t);
    h = add(h, t);
  }
  h = conv2d_masked(h, layers[n++]);
  relu_inplace(h);
  h = conv2d_masked(h, layers[n++]);
  check_finite(h, "output layer");
  return h;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int s = 0; s < 4; ++s) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * s);
    return v;
  }

  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::Truncated, std::string("weight file ends inside ") + what);
    }
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void ModelSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ShapeMismatch, "model spec: " + msg); };
  if (variant != Variant::Local && variant != Variant::Full) fail("unknown variant");
  if (horizon == 0 || horizon > 64) fail("horizon must be in [1, 64]");
  if (residual_blocks > 1024) fail("too many residual blocks");
  if (hidden_channels == 0 || hidden_channels > 65536) fail("hidden_channels out of range");
  if (mixtures == 0 || mixtures > 1024) fail("mixtures out of range");
  if (color_channels != 1 && color_channels != 3) fail("color_channels must be 1 or 3");
}

std::vector<ConvKernel> make_layers(const ModelSpec& spec) {
  spec.validate();
  const std::size_t hidden = spec.hidden_channels;
  std::vector<ConvKernel> layers;
  layers.emplace_back(hidden, spec.color_channels, spec.kernel_size(), MaskKind::A);
  for (std::uint32_t b = 0; b < spec.residual_blocks; ++b) {
    layers.emplace_back(hidden, hidden, 1, MaskKind::B);
    layers.emplace_back(hidden, hidden, spec.block_kernel_size(), MaskKind::B);
    layers.emplace_back(hidden, hidden, 1, MaskKind::B);
  }
  layers.emplace_back(hidden, hidden, 1, MaskKind::B);
  layers.emplace_back(spec.output_channels(), hidden, 1, MaskKind::B);
  return layers;
}

WeightBundle WeightBundle::zeros(const ModelSpec& spec) { return {spec, make_layers(spec)}; }

WeightBundle WeightBundle::random(const ModelSpec& spec, std::uint64_t seed, float scale) {
  WeightBundle bundle = zeros(spec);
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  for (auto& layer : bundle.layers) {
    const double bound = scale / std::sqrt(static_cast<double>(layer.in_channels * layer.size * layer.size));
    for (float& w : layer.weights) w = static_cast<float>(uniform() * bound);
    for (float& b : layer.bias) b = static_cast<float>(uniform() * bound);
  }
  return bundle;
}

std::size_t WeightBundle::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

void WeightBundle::validate() const {
  const auto expected = make_layers(spec);
  if (layers.size() != expected.size()) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(expected.size()) +
                                              " layers, got " + std::to_string(layers.size()));
  }
  for (std::size_t n = 0; n < layers.size(); ++n) {
    const auto& got = layers[n];
    const auto& want = expected[n];
    if (got.out_channels != want.out_channels || got.in_channels != want.in_channels ||
        got.size != want.size || got.mask_kind != want.mask_kind ||
        got.mask_groups != want.mask_groups) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(n) + " shape differs from spec");
    }
    got.validate();
  }
}

std::vector<std::uint8_t> save_weights(const WeightBundle& bundle) {
  bundle.validate();
  std::vector<std::uint8_t> out(std::begin(kWeightMagic), std::end(kWeightMagic));
  out.push_back(kWeightVersion);
  const auto& s = bundle.spec;
  put_u32(out, static_cast<std::uint32_t>(s.variant));
  put_u32(out, s.horizon);
  put_u32(out, s.residual_blocks);
  put_u32(out, s.hidden_channels);
  put_u32(out, s.mixtures);
  put_u32(out, s.color_channels);
  out.reserve(kWeightHeaderSize + 4 * bundle.parameter_count());
  for (const auto& layer : bundle.layers) {
    for (float w : layer.weights) put_u32(out, std::bit_cast<std::uint32_t>(w));
    for (float b : layer.bias) put_u32(out, std::bit_cast<std::uint32_t>(b));
  }
  return out;
}

WeightBundle load_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kWeightMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not a weight file (expected magic NLW1)");
  }
  ByteReader in(bytes);
  in.skip(4);
  in.need(1, "header");
  const std::uint8_t version = bytes[4];
  in.skip(1);
  if (version != kWeightVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "weight file version " + std::to_string(version));
  }
  ModelSpec spec;
  const std::uint32_t variant = in.u32("header");
  if (variant > 1) throw Error(ErrorCode::ShapeMismatch, "unknown variant id " + std::to_string(variant));
  spec.variant = static_cast<Variant>(variant);
  spec.horizon = in.u32("header");
  spec.residual_blocks = in.u32("header");
  spec.hidden_channels = in.u32("header");
  spec.mixtures = in.u32("header");
  spec.color_channels = in.u32("header");

  WeightBundle bundle = WeightBundle::zeros(spec);
  const std::size_t payload = 4 * bundle.parameter_count();
  if (in.remaining() < payload) {
    throw Error(ErrorCode::Truncated, "weight file holds " + std::to_string(in.remaining()) +
                                          " payload bytes, spec needs " + std::to_string(payload));
  }
  if (in.remaining() > payload) {
    throw Error(ErrorCode::ShapeMismatch, "weight file has " + std::to_string(in.remaining() - payload) +
                                              " bytes beyond the arrays implied by its spec");
  }
  for (auto& layer : bundle.layers) {
    for (float& w : layer.weights) w = in.f32("weights");
    for (float& b : layer.bias) b = in.f32("bias");
  }
  for (const auto& layer : bundle.layers) {
    for (float w : layer.weights)
      if (!std::isfinite(w)) throw Error(ErrorCode::CorruptModel, "non-finite weight in file");
    for (float b : layer.bias)
      if (!std::isfinite(b)) throw Error(ErrorCode::CorruptModel, "non-finite bias in file");
  }
  return bundle;
}

std::uint64_t fingerprint(std::span<const std::uint8_t> weight_file) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (std::uint8_t b : weight_file) {
    hash ^= b;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::uint64_t fingerprint(const WeightBundle& bundle) { return fingerprint(save_weights(bundle)); }

MixtureGrid::MixtureGrid(std::size_t height, std::size_t width, std::size_t mixtures,
                         std::size_t channels)
    : height_(height),
      width_(width),
      mixtures_(mixtures),
      channels_(channels),
      stride_(mixture_param_count(mixtures, channels)),
      values_(height * width * stride_) {}

MixtureParams MixtureGrid::at(std::size_t i, std::size_t j) const {
  const auto first = values_.begin() + static_cast<std::ptrdiff_t>((i * width_ + j) * stride_);
  return MixtureParams(mixtures_, channels_,
                       std::vector<float>(first, first + static_cast<std::ptrdiff_t>(stride_)));
}

std::span<float> MixtureGrid::raw(std::size_t i, std::size_t j) {
  return std::span<float>(values_).subspan((i * width_ + j) * stride_, stride_);
}

Tensor4 to_network_input(const Image& image) {
  Tensor4 t(1, image.channels(), image.height(), image.width());
  for (std::size_t c = 0; c < image.channels(); ++c)
    for (std::size_t i = 0; i < image.height(); ++i)
      for (std::size_t j = 0; j < image.width(); ++j)
        t.at(0, c, i, j) = static_cast<float>(rescale(image.at(i, j, c)));
  return t;
}

MixtureGrid forward(const WeightBundle& model, const Image& image) {
  if (image.channels() != model.spec.color_channels) {
    throw Error(ErrorCode::DimensionMismatch, "image has " + std::to_string(image.channels()) +
                                                  " channels, model expects " +
                                                  std::to_string(model.spec.color_channels));
  }
  model.validate();
  Tensor4 h = conv2d_masked(to_network_input(image), model.layers[0]);
  h = run_tail(model, std::move(h));
  MixtureGrid grid(image.height(), image.width(), model.spec.mixtures, model.spec.color_channels);
  for (std::size_t i = 0; i < image.height(); ++i)
    for (std::size_t j = 0; j < image.width(); ++j) {
      auto dst = grid.raw(i, j);
      for (std::size_t o = 0; o < dst.size(); ++o) dst[o] = h.at(0, o, i, j);
    }
  return grid;
}

ContextWindow::ContextWindow(std::size_t horizon, std::size_t channels)
    : horizon_(horizon), tensor_(1, channels, horizon + 1, 2 * horizon + 1) {}

void ContextWindow::set(std::ptrdiff_t dy, std::ptrdiff_t dx, std::size_t c, std::uint8_t value) {
  const auto h = static_cast<std::ptrdiff_t>(horizon_);
  if (dy < -h || dy > 0 || dx < -h || dx > h || (dy == 0 && dx >= 0)) {
    throw Error(ErrorCode::InvalidArgument, "context offset outside the causal window");
  }
  tensor_.at(0, c, static_cast<std::size_t>(dy + h), static_cast<std::size_t>(dx + h)) =
      static_cast<float>(rescale(value));
}

bool in_causal_window(std::size_t horizon, std::ptrdiff_t row, std::ptrdiff_t col,
                      std::ptrdiff_t target_row, std::ptrdiff_t target_col) {
  const auto h = static_cast<std::ptrdiff_t>(horizon);
  const std::ptrdiff_t dy = row - target_row;
  const std::ptrdiff_t dx = col - target_col;
  if (dy < -h || dy > 0 || dx < -h || dx > h) return false;
  return dy < 0 || dx < 0;
}

ContextWindow gather_context(const Image& image, std::size_t horizon, std::size_t i, std::size_t j) {
  return gather_context(horizon, image.channels(), image.height(), image.width(), i, j,
                        [&](std::size_t r, std::size_t c, std::size_t ch) { return image.at(r, c, ch); });
}

MixtureParams conditional_params(const WeightBundle& model, const ContextWindow& context) {
  if (model.spec.variant != Variant::Local) {
    throw Error(ErrorCode::UnsupportedVariant, "conditional_params requires a local model");
  }
  if (context.horizon() != model.spec.horizon || context.channels() != model.spec.color_channels) {
    throw Error(ErrorCode::DimensionMismatch, "context window does not match the model's horizon/channels");
  }
  const std::size_t h = model.spec.horizon;
  Tensor4 first(1, model.spec.hidden_channels, 1, 1);
  conv2d_masked_at(context.tensor(), model.layers[0], 0, h, h, first.data());
  Tensor4 out = run_tail(model, std::move(first));
  return MixtureParams(model.spec.mixtures, model.spec.color_channels,
                       std::vector<float>(out.data().begin(), out.data().end()));
}

Image sample(const WeightBundle& model, std::size_t height, std::size_t width, std::uint64_t seed) {
  const std::size_t channels = model.spec.color_channels;
  Image image(height, width, channels);
  std::mt19937_64 rng(seed);
  std::array<std::uint8_t, 3> pixel{};
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      const MixtureParams params = model.spec.variant == Variant::Local
                                       ? conditional_params(model, gather_context(image, model.spec.horizon, i, j))
                                       : forward(model, image).at(i, j);
      for (std::size_t c = 0; c < channels; ++c) {
        const QuantizedPmf pmf = quantized_pmf(params, c, std::span(pixel).first(c));
        const auto target = static_cast<std::uint32_t>(rng() >> (64 - kPmfTotalBits));
        pixel[c] = pmf.symbol_for(target);
        image.at(i, j, c) = pixel[c];
      }
    }
  }
  return image;
}

}  // namespace nelloc
