// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Runs only from the checked-in fixture weights.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "nelloc/codec.hpp"
#include "nelloc/error.hpp"
#include "nelloc/mixture.hpp"
#include "nelloc/model.hpp"
#include "nelloc/ood.hpp"
#include "test_support.hpp"

using namespace nelloc;
using testing::Rng;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Shape {
  std::size_t h, w;
};

constexpr Shape kShapes[] = {{1, 1}, {2, 3}, {7, 5}, {31, 33}, {64, 64}};
constexpr PatchGrid kGrids[] = {{1, 1}, {2, 2}, {4, 4}};
constexpr CoderKind kCoders[] = {CoderKind::Arithmetic, CoderKind::Rans, CoderKind::InterleavedRans};

const WeightBundle& model_for(std::size_t channels) {
  static const WeightBundle gray = testing::load_fixture("local_gray.nlw");
  static const WeightBundle rgb = testing::load_fixture("local_rgb.nlw");
  return channels == 1 ? gray : rgb;
}

Image content(Rng& rng, std::size_t h, std::size_t w, std::size_t c, int kind) {
  switch (kind % 3) {
    case 0:
      return testing::random_image(rng, h, w, c);
    case 1:
      return testing::plateau_texture(rng, h, w, c);
    default:
      return testing::ramp_texture(rng, h, w, c);
  }
}

// Shared by the round-trip and the codelength-bound criteria.
struct RoundtripStats {
  std::size_t images = 0;
  std::size_t failures = 0;
  std::size_t ac_patches = 0;
  std::size_t ac_violations = 0;
  double worst_ac_slack = -1e300;  // max over patches of payload bits - ideal
  double seconds = 0.0;
  std::string first_failure;
};

RoundtripStats run_roundtrips() {
  struct Combo {
    Shape shape;
    std::size_t channels;
    CoderKind coder;
    PatchGrid grid;
  };
  std::vector<Combo> combos;
  for (const Shape& s : kShapes)
    for (std::size_t c : {1u, 3u})
      for (CoderKind coder : kCoders)
        for (const PatchGrid& g : kGrids)
          if (g.rows <= s.h && g.cols <= s.w) combos.push_back({s, c, coder, g});

  RoundtripStats stats;
  Rng rng(20240501);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t n = 0; n < 500; ++n) {
    const Combo& combo = combos[n % combos.size()];
    const WeightBundle& model = model_for(combo.channels);
    const Image img = content(rng, combo.shape.h, combo.shape.w, combo.channels, static_cast<int>(n / combos.size()));
    ++stats.images;
    try {
      const CodeContainer c = compress(img, model, combo.coder, combo.grid);
      const Image back = decompress(parse_container(serialize(c)), model);
      if (!(back == img)) {
        ++stats.failures;
        if (stats.first_failure.empty()) stats.first_failure = "image " + std::to_string(n) + " decoded differently";
      }
      if (combo.coder == CoderKind::Arithmetic) {
        const auto ideal = ideal_codelength_per_patch(img, model, combo.grid);
        for (std::size_t p = 0; p < ideal.size(); ++p) {
          const double slack = 8.0 * c.payload_lengths[p] - ideal[p];
          stats.worst_ac_slack = std::max(stats.worst_ac_slack, slack);
          ++stats.ac_patches;
          if (slack > 2.0 + 32.0) ++stats.ac_violations;
        }
      }
    } catch (const std::exception& e) {
      ++stats.failures;
      if (stats.first_failure.empty()) stats.first_failure = "image " + std::to_string(n) + ": " + e.what();
    }
  }
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

const RoundtripStats& roundtrips() {
  static const RoundtripStats stats = run_roundtrips();
  return stats;
}

Outcome lossless_roundtrip() {
  const RoundtripStats& s = roundtrips();
  Outcome o;
  o.pass = s.images == 500 && s.failures == 0 && s.seconds < 300.0;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu images, %zu mismatches, %.1f s (limit 300 s)", s.images, s.failures, s.seconds);
  o.detail = buf;
  if (!s.first_failure.empty()) o.detail += "; first: " + s.first_failure;
  return o;
}

Outcome ac_codelength_bound() {
  const RoundtripStats& s = roundtrips();
  Outcome o;
  o.pass = s.ac_patches > 0 && s.ac_violations == 0;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu patches, %zu violations, worst payload - ideal = %.2f bits (limit 34)",
                s.ac_patches, s.ac_violations, s.worst_ac_slack);
  o.detail = buf;
  return o;
}

Outcome quantization_soundness() {
  Rng rng(77);
  std::size_t bad_sum = 0, bad_floor = 0, evaluated = 0;
  double gap_total = 0.0, gap_worst = 0.0;
  for (int n = 0; n < 10000; ++n) {
    const std::size_t K = 1 + rng.below(10);
    const std::size_t C = rng.below(2) ? 3 : 1;
    std::vector<float> raw(mixture_param_count(K, C));
    for (std::size_t k = 0; k < K; ++k) raw[k] = static_cast<float>(2.0 * rng.normal());
    for (std::size_t k = 0; k < C * K; ++k) raw[K + k] = static_cast<float>(rng.uniform() * 2.4 - 1.2);
    for (std::size_t k = 0; k < C * K; ++k) raw[K + C * K + k] = static_cast<float>(rng.uniform() * 9.0 - 8.0);
    for (std::size_t k = K + 2 * C * K; k < raw.size(); ++k) raw[k] = static_cast<float>(rng.normal());
    const MixtureParams params(K, C, raw);
    const std::uint8_t prior[2] = {rng.byte(), rng.byte()};
    const std::size_t channel = rng.below(C);
    const MixtureEval eval = mixture_pmf(params, channel, std::span(prior, channel));
    const QuantizedPmf q = quantize(eval);
    std::uint64_t sum = 0;
    std::uint32_t min_freq = UINT32_MAX;
    for (std::size_t v = 0; v < 256; ++v) {
      sum += q.freq(v);
      min_freq = std::min(min_freq, q.freq(v));
    }
    bad_sum += sum != kPmfTotal;
    bad_floor += min_freq < 1;
    // Expected extra bits per symbol when coding draws from the real pmf with
    // the quantized table: KL(p || q).
    double gap = 0.0;
    for (std::size_t v = 0; v < 256; ++v) {
      const double qv = static_cast<double>(q.freq(v)) / kPmfTotal;
      gap += eval.pmf[v] * std::log2(eval.pmf[v] / qv);
    }
    gap_total += gap;
    gap_worst = std::max(gap_worst, gap);
    ++evaluated;
  }
  const double mean_gap = gap_total / static_cast<double>(evaluated);
  Outcome o;
  o.pass = bad_sum == 0 && bad_floor == 0 && mean_gap <= 0.02;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%zu tables, %zu bad sums, %zu zero bins, mean gap %.2e bits (limit 0.02), worst %.2e", evaluated,
                bad_sum, bad_floor, mean_gap, gap_worst);
  o.detail = buf;
  return o;
}

// The window a local model of horizon h may see, written out independently of
// the library: h rows above spanning columns j-h..j+h, plus h pixels to the left.
bool oracle_window(std::ptrdiff_t h, std::ptrdiff_t a, std::ptrdiff_t b, std::ptrdiff_t i, std::ptrdiff_t j) {
  if (a < i - h || a > i || b < j - h || b > j + h) return false;
  return a < i || b < j;
}

Outcome causality() {
  constexpr std::size_t kSide = 9;
  std::size_t outside = 0, inside_silent = 0, mismatched = 0, checked = 0;
  for (std::uint32_t h = 1; h <= 3; ++h) {
    const WeightBundle model = WeightBundle::random(ModelSpec{Variant::Local, h, 2, 12, 3, 3}, 100 + h, 0.5f);
    Rng rng(h);
    const Image base = testing::random_image(rng, kSide, kSide, 3);
    const MixtureGrid ref = forward(model, base);

    for (std::size_t i = 0; i < kSide; ++i) {
      for (std::size_t j = 0; j < kSide; ++j) {
        const auto cond = conditional_params(model, gather_context(base, h, i, j));
        const auto full = ref.at(i, j);
        if (!std::equal(cond.raw().begin(), cond.raw().end(), full.raw().begin(), full.raw().end())) ++mismatched;
      }
    }

    for (std::size_t a = 0; a < kSide; ++a) {
      for (std::size_t b = 0; b < kSide; ++b) {
        Image perturbed = base;
        for (std::size_t c = 0; c < 3; ++c) perturbed.at(a, b, c) = static_cast<std::uint8_t>(base.at(a, b, c) ^ 0x80);
        const MixtureGrid out = forward(model, perturbed);
        for (std::size_t i = 0; i < kSide; ++i) {
          for (std::size_t j = 0; j < kSide; ++j) {
            const auto x = ref.at(i, j), y = out.at(i, j);
            const bool moved = !std::equal(x.raw().begin(), x.raw().end(), y.raw().begin(), y.raw().end());
            const bool allowed = oracle_window(h, static_cast<std::ptrdiff_t>(a), static_cast<std::ptrdiff_t>(b),
                                               static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j));
            if (moved && !allowed) ++outside;
            if (!moved && allowed) ++inside_silent;
            ++checked;
          }
        }
      }
    }
  }
  Outcome o;
  o.pass = outside == 0 && mismatched == 0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "h=1..3 on 9x9: %zu pairs, %zu influences outside the window, %zu silent window taps, "
                "%zu conditional/forward mismatches",
                checked, outside, inside_silent, mismatched);
  o.detail = buf;
  return o;
}

Outcome coder_agreement() {
  Rng rng(4242);
  double bits[3] = {0, 0, 0};
  std::size_t dims = 0, disagreements = 0;
  for (int n = 0; n < 50; ++n) {
    const std::size_t channels = n % 2 ? 3 : 1;
    const WeightBundle& model = model_for(channels);
    const Image img = content(rng, 64, 64, channels, 1 + n % 2);
    dims += img.dims();
    for (std::size_t k = 0; k < 3; ++k) {
      const auto bytes = serialize(compress(img, model, kCoders[k], {2, 2}));
      bits[k] += 8.0 * static_cast<double>(bytes.size());
      if (!(decompress(parse_container(bytes), model) == img)) ++disagreements;
    }
  }
  double bpd[3];
  for (std::size_t k = 0; k < 3; ++k) bpd[k] = bits[k] / static_cast<double>(dims);
  const double spread = *std::max_element(bpd, bpd + 3) - *std::min_element(bpd, bpd + 3);
  Outcome o;
  o.pass = disagreements == 0 && spread <= 0.03;
  char buf[256];
  std::snprintf(buf, sizeof buf, "50 images 64x64: bpd ac %.4f rans %.4f ians %.4f, spread %.4f (limit 0.03), %zu decode mismatches",
                bpd[0], bpd[1], bpd[2], spread, disagreements);
  o.detail = buf;
  return o;
}

Outcome ood_sanity() {
  const WeightBundle full = testing::load_fixture("ood_full.nlw");
  const WeightBundle local = testing::load_fixture("ood_local.nlw");
  // Same weights under both roles: a full model without residual blocks has
  // exactly the local architecture.
  WeightBundle same_full = local;
  same_full.spec.variant = Variant::Full;

  Rng rng(9001);
  std::vector<double> id_full, ood_full, id_ratio, ood_ratio, id_same, ood_same;
  for (int n = 0; n < 200; ++n) {
    const Image a = testing::plateau_texture(rng, 16, 16, 1);
    const Image b = testing::ramp_texture(rng, 16, 16, 1);
    const OodScore sa = score(a, full, local), sb = score(b, full, local);
    id_full.push_back(sa.log2_full);
    ood_full.push_back(sb.log2_full);
    id_ratio.push_back(sa.score);
    ood_ratio.push_back(sb.score);
    id_same.push_back(score(a, same_full, local).score);
    ood_same.push_back(score(b, same_full, local).score);
  }
  const double a_full = auroc(id_full, ood_full);
  const double a_ratio = auroc(id_ratio, ood_ratio);
  const double a_same = auroc(id_same, ood_same);
  Outcome o;
  o.pass = a_ratio >= a_full && std::abs(a_same - 0.5) <= 0.02;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "200 vs 200 16x16: full-likelihood AUROC %.4f, ratio AUROC %.4f, identical-model AUROC %.4f", a_full,
                a_ratio, a_same);
  o.detail = buf;
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"lossless-roundtrip", lossless_roundtrip},
      {"ac-codelength-bound", ac_codelength_bound},
      {"quantization-soundness", quantization_soundness},
      {"causality-receptive-field", causality},
      {"coder-agreement", coder_agreement},
      {"ood-sanity", ood_sanity},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
