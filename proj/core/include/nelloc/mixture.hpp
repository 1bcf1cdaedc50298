#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nelloc {

// Weight of the discrete uniform component in the Logistic-Uniform mixture.
inline constexpr double kUniformWeight = 1e-4;
// Lower clamp applied to every log-scale before exponentiation.
inline constexpr float kMinLogScale = -7.0f;
inline constexpr std::uint32_t kPmfTotalBits = 16;
inline constexpr std::uint32_t kPmfTotal = 1u << kPmfTotalBits;

// Number of raw network outputs per pixel for K mixture components.
constexpr std::size_t mixture_param_count(std::size_t mixtures, std::size_t channels) {
  return channels == 1 ? 3 * mixtures : 10 * mixtures;
}

// Predictive parameters for one pixel, stored exactly as the network emits them:
//   [logit weights (K) | means (C*K) | log scales (C*K) | coupling (3*K, colour only)]
// with per-channel blocks laid out channel-major. Clamping of log scales and the
// tanh on coupling coefficients happen in the accessors.
class MixtureParams {
 public:
  MixtureParams() = default;
  MixtureParams(std::size_t mixtures, std::size_t channels);
  MixtureParams(std::size_t mixtures, std::size_t channels, std::vector<float> raw);

  std::size_t mixtures() const { return mixtures_; }
  std::size_t channels() const { return channels_; }

  float logit_weight(std::size_t k) const { return raw_[k]; }
  float mean(std::size_t c, std::size_t k) const { return raw_[mixtures_ * (1 + c) + k]; }
  float raw_log_scale(std::size_t c, std::size_t k) const {
    return raw_[mixtures_ * (1 + channels_ + c) + k];
  }
  float log_scale(std::size_t c, std::size_t k) const;
  // Coupling n in {0: g<-r, 1: b<-r, 2: b<-g}, after tanh. Zero for grayscale.
  float coupling(std::size_t n, std::size_t k) const;

  std::span<float> raw() { return raw_; }
  std::span<const float> raw() const { return raw_; }

  bool operator==(const MixtureParams&) const = default;

 private:
  std::size_t mixtures_ = 0;
  std::size_t channels_ = 0;
  std::vector<float> raw_;
};

struct MixtureEval {
  std::array<double, 256> pmf{};
};

// Integer frequency table over the 256 byte values, total fixed at 2^16, every
// symbol at least 1.
class QuantizedPmf {
 public:
  QuantizedPmf();  // uniform
  static QuantizedPmf from_freqs(std::span<const std::uint32_t> freqs);

  std::uint32_t freq(std::size_t v) const { return cumulative_[v + 1] - cumulative_[v]; }
  std::uint32_t cumulative(std::size_t v) const { return cumulative_[v]; }
  static constexpr std::uint32_t total() { return kPmfTotal; }
  const std::array<std::uint32_t, 257>& cumulative_table() const { return cumulative_; }

  // Symbol s with cumulative(s) <= target < cumulative(s + 1).
  std::uint8_t symbol_for(std::uint32_t target) const;
  double codelength_bits(std::size_t v) const;

  bool operator==(const QuantizedPmf&) const = default;

 private:
  std::array<std::uint32_t, 257> cumulative_{};
};

// sigmoid((u - mean) / scale)
double logistic_cdf(double u, double mean, double scale);

// Maps a byte value to the model's [-1, 1] input range.
constexpr double rescale(std::uint8_t v) { return 2.0 * v / 255.0 - 1.0; }

// Distribution of subpixel `channel` given the already known values of the
// channels before it in the same pixel (used for the colour coupling shift).
MixtureEval mixture_pmf(const MixtureParams& params, std::size_t channel,
                        std::span<const std::uint8_t> prior_channels,
                        double uniform_weight = kUniformWeight);

QuantizedPmf quantize(const MixtureEval& eval);

inline QuantizedPmf quantized_pmf(const MixtureParams& params, std::size_t channel,
                                  std::span<const std::uint8_t> prior_channels) {
  return quantize(mixture_pmf(params, channel, prior_channels));
}

}  // namespace nelloc
