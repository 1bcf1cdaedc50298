#include "nelloc/ood.hpp"

#include <algorithm>

#include "nelloc/error.hpp"
#include "nelloc/likelihood.hpp"

namespace nelloc {

OodScore score(const Image& image, const WeightBundle& full_model, const WeightBundle& local_model) {
  if (full_model.spec.variant != Variant::Full || local_model.spec.variant != Variant::Local) {
    throw Error(ErrorCode::UnsupportedVariant, "ood score needs a full model and a local model");
  }
  if (full_model.spec.color_channels != local_model.spec.color_channels) {
    throw Error(ErrorCode::DimensionMismatch, "full and local models disagree on colour channels");
  }
  OodScore s;
  s.log2_full = -nll_bits(forward(full_model, image), image);
  s.log2_local = -nll_bits(forward(local_model, image), image);
  s.score = s.log2_full - s.log2_local;
  return s;
}

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) {
    throw Error(ErrorCode::InvalidArgument, "auroc needs at least one score in each set");
  }
  // Sort the OOD scores once; each ID score then counts strictly-smaller and
  // equal OOD scores by binary search.
  std::vector<double> ood(ood_scores.begin(), ood_scores.end());
  std::sort(ood.begin(), ood.end());
  double wins = 0.0;
  for (double s : id_scores) {
    const auto lo = std::lower_bound(ood.begin(), ood.end(), s);
    const auto hi = std::upper_bound(lo, ood.end(), s);
    wins += static_cast<double>(lo - ood.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(id_scores.size()) * static_cast<double>(ood.size()));
}

double bpd_report(std::span<const Image> dataset, const WeightBundle& model) {
  if (dataset.empty()) throw Error(ErrorCode::InvalidArgument, "bpd_report on an empty dataset");
  double total = 0.0;
  for (const auto& image : dataset) total += bpd(image, model);
  return total / static_cast<double>(dataset.size());
}

}  // namespace nelloc
