#include <benchmark/benchmark.h>

#include "nelloc/codec.hpp"
#include "nelloc/mixture.hpp"
#include "nelloc/model.hpp"
#include "test_support.hpp"

using namespace nelloc;

namespace {

const WeightBundle& rgb() {
  static const WeightBundle m = testing::load_fixture("local_rgb.nlw");
  return m;
}

Image texture(std::size_t side, std::size_t channels) {
  testing::Rng rng(1);
  return testing::plateau_texture(rng, side, side, channels);
}

std::vector<SymbolRecord> records(std::size_t n) {
  const Image img = texture(n, 3);
  return symbol_records(img, rgb());
}

void BM_MixturePmf(benchmark::State& state) {
  const MixtureGrid grid = forward(rgb(), texture(4, 3));
  const MixtureParams p = grid.at(2, 2);
  const std::uint8_t prior[2] = {100, 120};
  for (auto _ : state) benchmark::DoNotOptimize(mixture_pmf(p, 2, prior));
}
BENCHMARK(BM_MixturePmf);

void BM_Quantize(benchmark::State& state) {
  const MixtureGrid grid = forward(rgb(), texture(4, 3));
  const MixtureEval eval = mixture_pmf(grid.at(2, 2), 0, {});
  for (auto _ : state) benchmark::DoNotOptimize(quantize(eval));
}
BENCHMARK(BM_Quantize);

void BM_ConditionalParams(benchmark::State& state) {
  const Image img = texture(16, 3);
  const ContextWindow window = gather_context(img, rgb().spec.horizon, 8, 8);
  for (auto _ : state) benchmark::DoNotOptimize(conditional_params(rgb(), window));
}
BENCHMARK(BM_ConditionalParams);

void BM_Forward(benchmark::State& state) {
  const Image img = texture(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(forward(rgb(), img));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.dims()));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(64);

void BM_AcEncode(benchmark::State& state) {
  const auto r = records(32);
  for (auto _ : state) benchmark::DoNotOptimize(ac_encode(r));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.size()));
}
BENCHMARK(BM_AcEncode);

void BM_RansEncode(benchmark::State& state) {
  const auto r = records(32);
  for (auto _ : state) benchmark::DoNotOptimize(rans_encode(r));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.size()));
}
BENCHMARK(BM_RansEncode);

void BM_AcDecode(benchmark::State& state) {
  const auto r = records(32);
  const Bitstream s = ac_encode(r);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ac_decode(s, r.size(), [&](std::span<const std::uint8_t> done) { return r[done.size()].pmf; }));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.size()));
}
BENCHMARK(BM_AcDecode);

void BM_RansDecode(benchmark::State& state) {
  const auto r = records(32);
  const Bitstream s = rans_encode(r);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rans_decode(s, r.size(), [&](std::span<const std::uint8_t> done) { return r[done.size()].pmf; }));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.size()));
}
BENCHMARK(BM_RansDecode);

void BM_Compress(benchmark::State& state) {
  const Image img = texture(32, 3);
  const auto coder = static_cast<CoderKind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(compress(img, rgb(), coder, {2, 2}));
  state.SetLabel(coder_name(coder));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.dims()));
}
BENCHMARK(BM_Compress)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_Decompress(benchmark::State& state) {
  const Image img = texture(32, 3);
  const auto coder = static_cast<CoderKind>(state.range(0));
  const CodeContainer c = compress(img, rgb(), coder, {2, 2});
  for (auto _ : state) benchmark::DoNotOptimize(decompress(c, rgb()));
  state.SetLabel(coder_name(coder));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.dims()));
}
BENCHMARK(BM_Decompress)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
