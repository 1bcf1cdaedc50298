#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nelloc/image.hpp"
#include "nelloc/model.hpp"

namespace nelloc::testing {

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(NELLOC_FIXTURE_DIR) / name;
}

inline WeightBundle load_fixture(const std::string& name) {
  return load_weights(read_file(fixture_path(name)));
}

// Small deterministic generator; avoids std::*_distribution so fixtures are
// reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  std::uint8_t byte() { return static_cast<std::uint8_t>(engine_() >> 56); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

inline std::uint8_t clip_round(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
}

inline Image random_image(Rng& rng, std::size_t h, std::size_t w, std::size_t c) {
  Image img(h, w, c);
  for (auto& v : img.values()) v = rng.byte();
  return img;
}

// Texture A: flat per-image level plus strong i.i.d. noise.
inline Image plateau_texture(Rng& rng, std::size_t h, std::size_t w, std::size_t c) {
  Image img(h, w, c);
  std::vector<double> level(c);
  for (auto& l : level) l = rng.uniform(40, 215);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t k = 0; k < c; ++k) img.at(i, j, k) = clip_round(level[k] + 25.0 * rng.normal());
  return img;
}

// Texture B: smooth diagonal ramp with faint noise.
inline Image ramp_texture(Rng& rng, std::size_t h, std::size_t w, std::size_t c) {
  Image img(h, w, c);
  std::vector<double> base(c);
  for (auto& b : base) b = rng.uniform(30, 120);
  const double slope = rng.uniform(4, 9);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t k = 0; k < c; ++k)
        img.at(i, j, k) = clip_round(base[k] + slope * static_cast<double>(i + j) + 3.0 * rng.normal());
  return img;
}

// Spec-only model whose predictive table is (numerically) uniform: 256 narrow
// components, one centred on every byte value, all equally weighted.
inline WeightBundle uniform_model(std::uint32_t channels, std::uint32_t horizon = 1) {
  ModelSpec spec{Variant::Local, horizon, 0, 4, 256, channels};
  WeightBundle m = WeightBundle::zeros(spec);
  auto& bias = m.layers.back().bias;
  const std::size_t K = 256;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 0; k < K; ++k) {
      bias[K * (1 + c) + k] = static_cast<float>(2.0 * static_cast<double>(k) / 255.0 - 1.0);
      bias[K * (1 + channels + c) + k] = -7.0f;
    }
  }
  return m;
}

}  // namespace nelloc::testing
