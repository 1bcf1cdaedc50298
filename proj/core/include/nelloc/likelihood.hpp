#pragma once

#include "nelloc/image.hpp"
#include "nelloc/model.hpp"

namespace nelloc {

// Total -log2 likelihood of `image` under the real-valued predictive tables.
double nll_bits(const MixtureGrid& params, const Image& image);

// Same, but under the quantized tables the coders actually use.
double quantized_nll_bits(const MixtureGrid& params, const Image& image);

// Bits per dimension: nll_bits / (H * W * C).
double bpd(const Image& image, const WeightBundle& model);

}  // namespace nelloc
