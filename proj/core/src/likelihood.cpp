#include "nelloc/likelihood.hpp"

#include <array>
#include <cmath>

#include "nelloc/error.hpp"

namespace nelloc {

namespace {

template <typename PerSubpixel>
double sum_over_subpixels(const MixtureGrid& params, const Image& image, PerSubpixel&& bits) {
  if (params.height() != image.height() || params.width() != image.width()) {
    throw Error(ErrorCode::DimensionMismatch, "parameter grid and image sizes differ");
  }
  double total = 0.0;
  std::array<std::uint8_t, 3> pixel{};
  for (std::size_t i = 0; i < image.height(); ++i) {
    for (std::size_t j = 0; j < image.width(); ++j) {
      const MixtureParams p = params.at(i, j);
      for (std::size_t c = 0; c < image.channels(); ++c) pixel[c] = image.at(i, j, c);
      for (std::size_t c = 0; c < image.channels(); ++c) {
        total += bits(p, c, std::span<const std::uint8_t>(pixel).first(c), pixel[c]);
      }
    }
  }
  return total;
}

}  // namespace

double nll_bits(const MixtureGrid& params, const Image& image) {
  return sum_over_subpixels(params, image, [](const MixtureParams& p, std::size_t c,
                                              std::span<const std::uint8_t> prior, std::uint8_t v) {
    return -std::log2(mixture_pmf(p, c, prior).pmf[v]);
  });
}

double quantized_nll_bits(const MixtureGrid& params, const Image& image) {
  return sum_over_subpixels(params, image, [](const MixtureParams& p, std::size_t c,
                                              std::span<const std::uint8_t> prior, std::uint8_t v) {
    return quantized_pmf(p, c, prior).codelength_bits(v);
  });
}

double bpd(const Image& image, const WeightBundle& model) {
  return nll_bits(forward(model, image), image) / static_cast<double>(image.dims());
}

}  // namespace nelloc
