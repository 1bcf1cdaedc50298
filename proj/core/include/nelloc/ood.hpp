#pragma once

#include <span>
#include <vector>

#include "nelloc/image.hpp"
#include "nelloc/model.hpp"

namespace nelloc {

// Likelihood-ratio score in bits. The full model factors as local x non-local
// (up to a constant), so log2 p_full - log2 p_local ranks images by the
// unnormalized non-local likelihood. Higher means more in-distribution.
struct OodScore {
  double log2_full = 0.0;
  double log2_local = 0.0;
  double score = 0.0;
};

OodScore score(const Image& image, const WeightBundle& full_model, const WeightBundle& local_model);

// Mann-Whitney estimate of P(id > ood) + 0.5 * P(id == ood).
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

// Mean bits per dimension over a dataset.
double bpd_report(std::span<const Image> dataset, const WeightBundle& model);

}  // namespace nelloc
