// SPDX-License-Identifier: Apache-2.0
// Serial reference path vs OpenMP path for the hot kernels.
#include <benchmark/benchmark.h>

#include "nsa/kernels.hpp"
#include "nsa/resolvent.hpp"

namespace {

nsa::Exec exec_of(const benchmark::State& st) { return st.range(1) ? nsa::Exec::PARALLEL : nsa::Exec::SERIAL; }

void BM_AssembleR0(benchmark::State& st) {
  auto g = nsa::make_grid(nsa::GridMode::RADIAL_SWAVE, 20.0, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(nsa::build_R0(g, {1.0, nsa::Branch::PLUS}, exec_of(st)).matrix.data());
}

void BM_WeightedL1(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const nsa::CMat E = nsa::CMat::Random(n, n);
  const nsa::RVec w = nsa::RVec::Constant(n, 0.05);
  for (auto _ : st) benchmark::DoNotOptimize(nsa::weighted_l1_max(E, w, exec_of(st)));
}

void BM_DftRows(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const nsa::CMat G = nsa::CMat::Random(n, 1024);
  for (auto _ : st) benchmark::DoNotOptimize(nsa::dft_rows(G, -1.0, 0.01, exec_of(st)).data());
}

}  // namespace

BENCHMARK(BM_AssembleR0)->ArgsProduct({{200, 800}, {0, 1}});
BENCHMARK(BM_WeightedL1)->ArgsProduct({{400, 1600}, {0, 1}});
BENCHMARK(BM_DftRows)->ArgsProduct({{200, 800}, {0, 1}});

BENCHMARK_MAIN();
