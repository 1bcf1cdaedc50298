#include <doctest.h>

#include <cmath>
#include <limits>

#include "nelloc/error.hpp"
#include "nelloc/model.hpp"
#include "test_support.hpp"

using namespace nelloc;

namespace {

ModelSpec small_spec(Variant variant, std::uint32_t h, std::uint32_t r, std::uint32_t channels) {
  return ModelSpec{variant, h, r, 8, 3, channels};
}

// Written out directly from the dependency set: rows [i-h, i-1] over columns
// [j-h, j+h], and row i over columns [j-h, j-1].
bool oracle_window(int h, int di, int dj) {
  if (di >= -h && di <= -1 && dj >= -h && dj <= h) return true;
  return di == 0 && dj >= -h && dj <= -1;
}

}  // namespace

TEST_CASE("spec-derived shapes") {
  ModelSpec gray{Variant::Local, 3, 1, 256, 10, 1};
  CHECK(gray.kernel_size() == 7);
  CHECK(gray.output_channels() == 30);
  ModelSpec color{Variant::Full, 4, 2, 256, 10, 3};
  CHECK(color.kernel_size() == 9);
  CHECK(color.output_channels() == 100);

  const auto local_layers = make_layers(ModelSpec{Variant::Local, 2, 2, 16, 5, 3});
  const auto full_layers = make_layers(ModelSpec{Variant::Full, 2, 2, 16, 5, 3});
  REQUIRE(local_layers.size() == 1 + 3 * 2 + 2);
  CHECK(local_layers[0].size == 5);
  CHECK(local_layers[0].mask_kind == MaskKind::A);
  for (std::size_t n = 1; n < local_layers.size(); ++n) {
    CHECK(local_layers[n].size == 1);
    CHECK(local_layers[n].mask_kind == MaskKind::B);
  }
  CHECK(full_layers[1].size == 1);
  CHECK(full_layers[2].size == 3);
  CHECK(full_layers[3].size == 1);
  CHECK(full_layers.back().out_channels == 50);
}

TEST_CASE("serialized model sizes for h=3, 256 channels, K=10, RGB") {
  // Reported sizes are in MiB of 32-bit weights: 0.49 (r=0) and 2.75 (r=3).
  auto mib = [](std::uint32_t r) {
    return static_cast<double>(save_weights(WeightBundle::zeros({Variant::Local, 3, r, 256, 10, 3})).size()) /
           (1024.0 * 1024.0);
  };
  const double r0 = mib(0), r1 = mib(1), r3 = mib(3);
  CHECK(std::abs(r0 - 0.49) / 0.49 < 0.05);
  CHECK(std::abs(r3 - 2.75) / 2.75 < 0.05);
  // Each residual block adds the same three 256x256 1x1 convolutions.
  CHECK(std::abs((r3 - r0) / 3.0 - (r1 - r0)) < 1e-9);
}

TEST_CASE("zero-weight model predicts the same parameters at every pixel") {
  const WeightBundle m = WeightBundle::zeros(small_spec(Variant::Local, 2, 1, 3));
  testing::Rng rng(1);
  const Image img = testing::random_image(rng, 5, 7, 3);
  const MixtureGrid grid = forward(m, img);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 7; ++j) CHECK(grid.at(i, j) == grid.at(0, 0));
}

TEST_CASE("perturbing the right neighbour leaves a pixel's parameters unchanged") {
  testing::Rng rng(2);
  for (Variant v : {Variant::Local, Variant::Full}) {
    const WeightBundle m = WeightBundle::random(small_spec(v, 2, 2, 3), 11);
    Image img = testing::random_image(rng, 6, 6, 3);
    const MixtureParams before = forward(m, img).at(3, 2);
    for (std::size_t c = 0; c < 3; ++c) img.at(3, 3, c) = static_cast<std::uint8_t>(img.at(3, 3, c) ^ 0xFF);
    CHECK(forward(m, img).at(3, 2) == before);
  }
}

TEST_CASE("h=3 local model sees three rows up but not four") {
  testing::Rng rng(3);
  const WeightBundle m = WeightBundle::random(small_spec(Variant::Local, 3, 1, 1), 12);
  Image img = testing::random_image(rng, 12, 12, 1);
  const MixtureParams base = forward(m, img).at(8, 6);
  Image far = img;
  far.at(4, 6, 0) = static_cast<std::uint8_t>(far.at(4, 6, 0) ^ 0xFF);
  CHECK(forward(m, far).at(8, 6) == base);
  Image near = img;
  near.at(5, 6, 0) = static_cast<std::uint8_t>(near.at(5, 6, 0) ^ 0xFF);
  CHECK_FALSE(forward(m, near).at(8, 6) == base);
}

TEST_CASE("receptive field of the local model equals the causal window") {
  for (std::uint32_t h = 1; h <= 3; ++h) {
    const WeightBundle m = WeightBundle::random(small_spec(Variant::Local, h, 1, 1), 100 + h);
    testing::Rng rng(h);
    const Image img = testing::random_image(rng, 9, 9, 1);
    const MixtureParams base = forward(m, img).at(4, 4);
    for (int di = -4; di <= 4; ++di) {
      for (int dj = -4; dj <= 4; ++dj) {
        Image p = img;
        auto& v = p.at(static_cast<std::size_t>(4 + di), static_cast<std::size_t>(4 + dj), 0);
        v = static_cast<std::uint8_t>(v ^ 0xFF);
        const bool changed = !(forward(m, p).at(4, 4) == base);
        const bool inside = oracle_window(static_cast<int>(h), di, dj);
        CAPTURE(h);
        CAPTURE(di);
        CAPTURE(dj);
        CHECK(changed == inside);
        CHECK(in_causal_window(h, 4 + di, 4 + dj, 4, 4) == inside);
      }
    }
  }
}

TEST_CASE("conditional_params matches forward bit for bit") {
  testing::Rng rng(4);
  for (std::uint32_t channels : {1u, 3u}) {
    for (std::uint32_t h : {1u, 2u, 3u}) {
      const WeightBundle m = WeightBundle::random(small_spec(Variant::Local, h, 2, channels), 7 * h + channels);
      const Image img = testing::random_image(rng, 1 + rng.below(9), 1 + rng.below(9), channels);
      const MixtureGrid grid = forward(m, img);
      for (std::size_t i = 0; i < img.height(); ++i)
        for (std::size_t j = 0; j < img.width(); ++j) {
          const MixtureParams p = conditional_params(m, gather_context(img, h, i, j));
          REQUIRE(p == grid.at(i, j));
        }
    }
  }
}

TEST_CASE("context of the only pixel of a 1x1 image is all zero padding") {
  const Image img(1, 1, 3, 200);
  const ContextWindow w = gather_context(img, 2, 0, 0);
  for (float v : w.tensor().data()) CHECK(v == 0.0f);
  const WeightBundle m = WeightBundle::random(small_spec(Variant::Local, 2, 0, 3), 5);
  CHECK(conditional_params(m, w) == forward(m, img).at(0, 0));
}

TEST_CASE("all-zero context equals forward at the corner of an all-zero-valued image") {
  // Value 127.5 maps to exactly 0 after rescaling, which no byte reaches; the
  // corner of any image has an empty causal window, so compare with that.
  const WeightBundle m = WeightBundle::random(small_spec(Variant::Local, 2, 1, 1), 6);
  CHECK(conditional_params(m, ContextWindow(2, 1)) == forward(m, Image(4, 4, 1, 0)).at(0, 0));
}

TEST_CASE("conditional_params rejects full models and mismatched windows") {
  const WeightBundle full = WeightBundle::random(small_spec(Variant::Full, 2, 1, 1), 7);
  try {
    (void)conditional_params(full, ContextWindow(2, 1));
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedVariant);
  }
  const WeightBundle local = WeightBundle::random(small_spec(Variant::Local, 2, 1, 1), 7);
  CHECK_THROWS_AS(conditional_params(local, ContextWindow(3, 1)), Error);
}

TEST_CASE("forward rejects channel mismatches and non-finite weights") {
  WeightBundle m = WeightBundle::random(small_spec(Variant::Local, 1, 0, 1), 8);
  CHECK_THROWS_AS(forward(m, Image(3, 3, 3)), Error);
  m.layers.back().bias[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    (void)forward(m, Image(3, 3, 1));
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptModel);
  }
}

TEST_CASE("weight files round-trip bit-exactly") {
  for (Variant v : {Variant::Local, Variant::Full}) {
    const WeightBundle m = WeightBundle::random(ModelSpec{v, 2, 2, 6, 4, 3}, 9);
    const auto bytes = save_weights(m);
    const WeightBundle back = load_weights(bytes);
    CHECK(back.spec == m.spec);
    REQUIRE(back.layers.size() == m.layers.size());
    for (std::size_t n = 0; n < m.layers.size(); ++n) {
      CHECK(back.layers[n].weights == m.layers[n].weights);
      CHECK(back.layers[n].bias == m.layers[n].bias);
    }
    CHECK(save_weights(back) == bytes);
    CHECK(fingerprint(back) == fingerprint(m));
  }
}

TEST_CASE("weight file header layout") {
  const auto bytes = save_weights(WeightBundle::zeros(ModelSpec{Variant::Full, 3, 1, 4, 2, 1}));
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "NLW1");
  CHECK(bytes[4] == 1);
  const std::vector<std::uint8_t> fields(bytes.begin() + 5, bytes.begin() + 29);
  const std::vector<std::uint8_t> expected = {1, 0, 0, 0, 3, 0, 0, 0, 1, 0, 0, 0,
                                              4, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0};
  CHECK(fields == expected);
}

TEST_CASE("weight file errors are distinct") {
  const auto good = save_weights(WeightBundle::random(ModelSpec{Variant::Local, 1, 0, 4, 2, 1}, 3));
  auto code_of = [](std::vector<std::uint8_t> bytes) {
    try {
      (void)load_weights(bytes);
    } catch (const Error& e) {
      return e.code();
    }
    FAIL("expected an exception");
    return ErrorCode::Io;
  };
  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(code_of(bad_magic) == ErrorCode::BadMagic);
  CHECK(code_of(std::vector<std::uint8_t>(good.begin(), good.end() - 3)) == ErrorCode::Truncated);
  CHECK(code_of(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)) == ErrorCode::Truncated);
  auto longer = good;
  longer.push_back(0);
  CHECK(code_of(longer) == ErrorCode::ShapeMismatch);
  auto bad_channels = good;
  bad_channels[25] = 2;
  CHECK(code_of(bad_channels) == ErrorCode::ShapeMismatch);
  auto version = good;
  version[4] = 9;
  CHECK(code_of(version) == ErrorCode::UnsupportedVersion);
}

TEST_CASE("sampling is deterministic for a seed and works at any size") {
  const WeightBundle m = WeightBundle::random(small_spec(Variant::Local, 2, 1, 3), 21);
  CHECK(sample(m, 6, 5, 42) == sample(m, 6, 5, 42));
  CHECK_FALSE(sample(m, 6, 5, 42) == sample(m, 6, 5, 43));
  const Image big = sample(m, 100, 100, 7);
  CHECK(big.height() == 100);
  CHECK(big.width() == 100);
  CHECK(big.channels() == 3);

  const WeightBundle full = WeightBundle::random(small_spec(Variant::Full, 1, 1, 1), 22);
  CHECK(sample(full, 4, 4, 1) == sample(full, 4, 4, 1));
}

TEST_CASE("a collapsed mixture samples an (almost) constant image") {
  // One component of minimum scale at value 77. It keeps about 97.3% of the
  // mass in its own bin, so 256 draws land there about 249 times.
  WeightBundle m = WeightBundle::zeros(ModelSpec{Variant::Local, 1, 0, 4, 1, 1});
  m.layers.back().bias[1] = static_cast<float>(2.0 * 77 / 255.0 - 1.0);
  m.layers.back().bias[2] = -7.0f;
  const Image img = sample(m, 16, 16, 3);
  std::size_t hits = 0;
  for (std::uint8_t v : img.values()) hits += v == 77 ? 1 : 0;
  const double p = 2.0 / (1.0 + std::exp(-1.0 / (255.0 * std::exp(-7.0)))) - 1.0;
  const double expected = 256.0 * p;
  CHECK(static_cast<double>(hits) >= expected - 4.0 * std::sqrt(expected * (1.0 - p)));
  CHECK(hits < 256);
}
