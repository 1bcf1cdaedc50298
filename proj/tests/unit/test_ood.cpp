#include <doctest.h>

#include "nelloc/error.hpp"
#include "nelloc/likelihood.hpp"
#include "nelloc/ood.hpp"
#include "test_support.hpp"

using namespace nelloc;

TEST_CASE("auroc on small lists") {
  const std::vector<double> hi{2, 3}, lo{0, 1};
  CHECK(auroc(hi, lo) == 1.0);
  CHECK(auroc(lo, hi) == 0.0);
  CHECK(auroc(hi, hi) == 0.5);
  const std::vector<double> a{1, 2, 3}, b{2};
  CHECK(auroc(a, b) == 0.5);
  const std::vector<double> c{5, 5, 5}, d{5, 4};
  // Pairs: three ties and three wins out of six.
  CHECK(auroc(c, d) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("auroc matches the pairwise count on random scores") {
  testing::Rng rng(11);
  for (int n = 0; n < 50; ++n) {
    std::vector<double> id(1 + rng.below(40)), ood(1 + rng.below(40));
    for (double& v : id) v = static_cast<double>(rng.below(20));
    for (double& v : ood) v = static_cast<double>(rng.below(20)) - 3.0;
    double wins = 0;
    for (double x : id)
      for (double y : ood) wins += x > y ? 1.0 : x == y ? 0.5 : 0.0;
    CHECK(auroc(id, ood) == doctest::Approx(wins / static_cast<double>(id.size() * ood.size())));
  }
}

TEST_CASE("auroc is invariant under monotone transforms") {
  testing::Rng rng(12);
  std::vector<double> id(30), ood(25);
  for (double& v : id) v = rng.normal() + 0.5;
  for (double& v : ood) v = rng.normal();
  const double base = auroc(id, ood);
  for (double& v : id) v = std::exp(3.0 * v) - 7.0;
  for (double& v : ood) v = std::exp(3.0 * v) - 7.0;
  CHECK(auroc(id, ood) == base);
}

TEST_CASE("auroc rejects empty input") {
  const std::vector<double> some{1.0}, none;
  CHECK_THROWS_AS(auroc(none, some), Error);
  CHECK_THROWS_AS(auroc(some, none), Error);
}

TEST_CASE("identical full and local models give a zero score") {
  const WeightBundle local = WeightBundle::random(ModelSpec{Variant::Local, 2, 0, 8, 3, 1}, 21, 0.3f);
  WeightBundle full = local;
  full.spec.variant = Variant::Full;
  testing::Rng rng(13);
  for (int n = 0; n < 5; ++n) {
    const Image img = testing::random_image(rng, 6, 7, 1);
    const OodScore s = score(img, full, local);
    CHECK(s.score == 0.0);
    CHECK(s.log2_full == s.log2_local);
    CHECK(s.log2_local < 0.0);
  }
}

TEST_CASE("score is the difference of the two log-likelihoods") {
  const WeightBundle local = WeightBundle::random(ModelSpec{Variant::Local, 1, 0, 6, 2, 3}, 22, 0.3f);
  const WeightBundle full = WeightBundle::random(ModelSpec{Variant::Full, 2, 1, 6, 2, 3}, 23, 0.3f);
  testing::Rng rng(14);
  const Image img = testing::random_image(rng, 5, 4, 3);
  const OodScore s = score(img, full, local);
  CHECK(s.log2_full == doctest::Approx(-nll_bits(forward(full, img), img)));
  CHECK(s.log2_local == doctest::Approx(-nll_bits(forward(local, img), img)));
  CHECK(s.score == doctest::Approx(s.log2_full - s.log2_local));
}

TEST_CASE("score checks model variants") {
  const WeightBundle local = WeightBundle::random(ModelSpec{Variant::Local, 1, 0, 4, 2, 1}, 24);
  const Image img(3, 3, 1);
  try {
    (void)score(img, local, local);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedVariant);
  }
}

TEST_CASE("bpd report of the uniform model is eight") {
  testing::Rng rng(15);
  std::vector<Image> images;
  for (int n = 0; n < 4; ++n) images.push_back(testing::random_image(rng, 3 + n, 4, 1));
  CHECK(bpd_report(images, testing::uniform_model(1)) == doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("bpd report of one image is that image's bpd") {
  testing::Rng rng(16);
  const WeightBundle m = WeightBundle::random(ModelSpec{Variant::Local, 1, 0, 6, 2, 3}, 25, 0.3f);
  const std::vector<Image> one{testing::random_image(rng, 5, 6, 3)};
  CHECK(bpd_report(one, m) == bpd(one[0], m));
}
