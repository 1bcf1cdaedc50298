#include "nelloc/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nelloc/error.hpp"

namespace nelloc {

MixtureParams::MixtureParams(std::size_t mixtures, std::size_t channels)
    : MixtureParams(mixtures, channels,
                    std::vector<float>(mixture_param_count(mixtures, channels), 0.0f)) {}

MixtureParams::MixtureParams(std::size_t mixtures, std::size_t channels, std::vector<float> raw)
    : mixtures_(mixtures), channels_(channels), raw_(std::move(raw)) {
  if (mixtures == 0 || (channels != 1 && channels != 3)) {
    throw Error(ErrorCode::InvalidArgument, "mixture params need K >= 1 and 1 or 3 channels");
  }
  if (raw_.size() != mixture_param_count(mixtures, channels)) {
    throw Error(ErrorCode::ShapeMismatch, "mixture params: expected " +
                                              std::to_string(mixture_param_count(mixtures, channels)) +
                                              " values, got " + std::to_string(raw_.size()));
  }
}

float MixtureParams::log_scale(std::size_t c, std::size_t k) const {
  return std::max(raw_log_scale(c, k), kMinLogScale);
}

float MixtureParams::coupling(std::size_t n, std::size_t k) const {
  if (channels_ == 1) return 0.0f;
  return std::tanh(raw_[mixtures_ * 7 + n * mixtures_ + k]);
}

QuantizedPmf::QuantizedPmf() {
  for (std::size_t v = 0; v <= 256; ++v) cumulative_[v] = static_cast<std::uint32_t>(v * 256);
}

QuantizedPmf QuantizedPmf::from_freqs(std::span<const std::uint32_t> freqs) {
  if (freqs.size() != 256) {
    throw Error(ErrorCode::InvalidArgument, "frequency table must have 256 entries");
  }
  QuantizedPmf q;
  q.cumulative_[0] = 0;
  for (std::size_t v = 0; v < 256; ++v) {
    if (freqs[v] == 0) {
      throw Error(ErrorCode::InvalidArgument, "frequency of symbol " + std::to_string(v) + " is zero");
    }
    q.cumulative_[v + 1] = q.cumulative_[v] + freqs[v];
  }
  if (q.cumulative_[256] != kPmfTotal) {
    throw Error(ErrorCode::InvalidArgument,
                "frequencies sum to " + std::to_string(q.cumulative_[256]) + ", expected 65536");
  }
  return q;
}

std::uint8_t QuantizedPmf::symbol_for(std::uint32_t target) const {
  // First entry strictly greater than target, minus one.
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  return static_cast<std::uint8_t>(std::distance(cumulative_.begin(), it) - 1);
}

double QuantizedPmf::codelength_bits(std::size_t v) const {
  return static_cast<double>(kPmfTotalBits) - std::log2(static_cast<double>(freq(v)));
}

double logistic_cdf(double u, double mean, double scale) {
  return 1.0 / (1.0 + std::exp(-(u - mean) / scale));
}

MixtureEval mixture_pmf(const MixtureParams& params, std::size_t channel,
                        std::span<const std::uint8_t> prior_channels, double uniform_weight) {
  const std::size_t K = params.mixtures();
  if (channel >= params.channels() || prior_channels.size() < channel) {
    throw Error(ErrorCode::InvalidArgument, "mixture_pmf: channel out of range or missing prior values");
  }
  for (float v : params.raw()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::CorruptModel, "non-finite mixture parameter");
  }

  std::vector<double> weights(K);
  double max_logit = params.logit_weight(0);
  for (std::size_t k = 1; k < K; ++k) max_logit = std::max<double>(max_logit, params.logit_weight(k));
  double norm = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    weights[k] = std::exp(static_cast<double>(params.logit_weight(k)) - max_logit);
    norm += weights[k];
  }
  for (double& w : weights) w /= norm;

  // Upper bin edges of values 0..254; value 255 extends to +inf and value 0 to -inf.
  std::array<double, 255> edge_cdf{};
  std::array<double, 256> logistic{};
  for (std::size_t k = 0; k < K; ++k) {
    double mean = params.mean(channel, k);
    if (channel == 1) {
      mean += params.coupling(0, k) * rescale(prior_channels[0]);
    } else if (channel == 2) {
      mean += params.coupling(1, k) * rescale(prior_channels[0]) +
              params.coupling(2, k) * rescale(prior_channels[1]);
    }
    const double scale = std::exp(static_cast<double>(params.log_scale(channel, k)));
    for (std::size_t v = 0; v < 255; ++v) {
      edge_cdf[v] = logistic_cdf(rescale(static_cast<std::uint8_t>(v)) + 1.0 / 255.0, mean, scale);
    }
    logistic[0] += weights[k] * edge_cdf[0];
    for (std::size_t v = 1; v < 255; ++v) logistic[v] += weights[k] * (edge_cdf[v] - edge_cdf[v - 1]);
    logistic[255] += weights[k] * (1.0 - edge_cdf[254]);
  }

  MixtureEval eval;
  const double floor = uniform_weight / 256.0;
  for (std::size_t v = 0; v < 256; ++v) {
    eval.pmf[v] = (1.0 - uniform_weight) * logistic[v] + floor;
  }
  return eval;
}

QuantizedPmf quantize(const MixtureEval& eval) {
  std::array<std::uint32_t, 256> freqs{};
  std::int64_t sum = 0;
  for (std::size_t v = 0; v < 256; ++v) {
    const double scaled = std::nearbyint(eval.pmf[v] * static_cast<double>(kPmfTotal));
    freqs[v] = static_cast<std::uint32_t>(std::max(1.0, scaled));
    sum += freqs[v];
  }
  std::int64_t residual = sum - static_cast<std::int64_t>(kPmfTotal);
  if (residual != 0) {
    // Spread the correction one unit at a time over the largest bins, visiting
    // them in order of decreasing frequency (lower symbol first on ties).
    std::array<std::uint16_t, 256> order{};
    std::iota(order.begin(), order.end(), 0);
    // Only the first |residual| positions are visited unless it exceeds 256.
    const auto visited = static_cast<std::ptrdiff_t>(std::min<std::int64_t>(std::abs(residual), 256));
    std::partial_sort(order.begin(), order.begin() + visited, order.end(), [&](std::uint16_t a, std::uint16_t b) {
      return freqs[a] != freqs[b] ? freqs[a] > freqs[b] : a < b;
    });
    const int step = residual > 0 ? -1 : 1;
    while (residual != 0) {
      bool changed = false;
      for (std::uint16_t v : order) {
        if (residual == 0) break;
        if (step < 0 && freqs[v] <= 1) break;  // sorted: everything after is 1 too
        freqs[v] = static_cast<std::uint32_t>(static_cast<std::int64_t>(freqs[v]) + step);
        residual += step;
        changed = true;
      }
      if (!changed) throw Error(ErrorCode::CorruptModel, "cannot normalize frequency table");
    }
  }
  return QuantizedPmf::from_freqs(freqs);
}

}  // namespace nelloc
