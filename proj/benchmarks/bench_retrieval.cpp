#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "semhash/retrieval.hpp"

using namespace semhash;

namespace {

std::vector<BinaryCode> random_codes(std::size_t n, std::size_t bits, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<BinaryCode> out;
  out.reserve(n);
  const std::size_t words = words_for_bits(bits);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint64_t> w(words);
    for (auto& x : w) x = rng();
    if (bits % 64) w.back() &= (std::uint64_t{1} << (bits % 64)) - 1;
    out.emplace_back(bits, std::move(w));
  }
  return out;
}

std::vector<IndexEntry> entries(std::size_t n) {
  std::vector<IndexEntry> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = {"g" + std::to_string(i), "item" + std::to_string(i / 5), 0};
  return e;
}

void BM_IndexBuild(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto codes = random_codes(n, 48, 1);
  const auto meta = entries(n);
  for (auto _ : state) {
    auto idx = HammingIndex::build(48, meta, codes);
    benchmark::DoNotOptimize(idx);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_IndexBuild)->Arg(10000)->Unit(benchmark::kMillisecond);

// scan cost should grow linearly with gallery size
void BM_QueryScan(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto codes = random_codes(n, 48, 2);
  const auto idx = HammingIndex::build(48, entries(n), codes);
  const auto probes = random_codes(64, 48, 3);
  std::size_t q = 0;
  for (auto _ : state) {
    auto hits = idx.query(probes[q++ % probes.size()], 10);
    benchmark::DoNotOptimize(hits);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_QueryScan)->RangeMultiplier(4)->Range(1024, 65536)->Unit(benchmark::kMicrosecond);

void BM_Binarize(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  std::vector<double> code(static_cast<std::size_t>(state.range(0)));
  for (auto& x : code) x = std::tanh(nd(rng));
  for (auto _ : state) {
    auto b = binarize(code);
    benchmark::DoNotOptimize(b);
  }
}
BENCHMARK(BM_Binarize)->Arg(16)->Arg(48)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
