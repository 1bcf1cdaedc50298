#include <doctest.h>

#include <json.hpp>

#include <fstream>

#include "nelloc/likelihood.hpp"
#include "nelloc/model.hpp"
#include "test_support.hpp"

using namespace nelloc;

// Reference codelengths come from the float64 torch implementation in
// tools/fixtures/parity.py, run on the checked-in weight files.
TEST_CASE("forward pass agrees with the trainer's implementation") {
  std::ifstream in(testing::fixture_path("parity.json"));
  REQUIRE(in);
  const auto reference = nlohmann::json::parse(in);
  REQUIRE(reference.size() == 4);
  for (const auto& [name, records] : reference.items()) {
    CAPTURE(name);
    const WeightBundle model = testing::load_fixture(name);
    REQUIRE(records.size() == 20);
    double worst = 0.0;
    for (const auto& r : records) {
      const Image img(r["height"], r["width"], r["channels"], r["values"].get<std::vector<std::uint8_t>>());
      const double bits = nll_bits(forward(model, img), img);
      worst = std::max(worst, std::abs(bits - r["bits"].get<double>()) / static_cast<double>(img.dims()));
    }
    CAPTURE(worst);
    CHECK(worst <= 1e-3);
  }
}
