// Copyright 2026 The KG2data Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial vs parallel kernels. Arg 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "kg2data/common.hpp"
#include "kg2data/kernels.hpp"
#include "kg2data/kg/leiden.hpp"

using namespace kg2data;

namespace {

kernels::Exec exec_of(const benchmark::State& state) {
    return state.range(0) == 0 ? kernels::Exec::serial : kernels::Exec::parallel;
}

kg::WeightedGraph random_graph(std::size_t n, std::size_t m, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
    while (edges.size() < m) {
        auto u = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(n) - 1));
        auto v = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(n) - 1));
        if (u != v) edges.emplace_back(u, v, 1.0);
    }
    return kg::WeightedGraph(n, edges);
}

void BM_Modularity(benchmark::State& state) {
    static const auto g = random_graph(100000, 500000, 1);
    std::vector<std::size_t> membership(g.size());
    for (std::size_t i = 0; i < membership.size(); ++i) membership[i] = i % 97;
    for (auto _ : state) benchmark::DoNotOptimize(kernels::modularity(g, membership, 1.0, exec_of(state)));
}
BENCHMARK(BM_Modularity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DotScores(benchmark::State& state) {
    const std::size_t rows = 20000, dim = 512;
    static std::vector<float> matrix = [&] {
        SplitMix64 rng(2);
        std::vector<float> m(rows * dim);
        for (auto& x : m) x = static_cast<float>(rng.uniform());
        return m;
    }();
    std::vector<float> query(dim, 0.5f);
    std::vector<double> out(rows);
    for (auto _ : state) {
        kernels::dot_scores(matrix, dim, query, out, exec_of(state));
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_DotScores)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ForEachIndex(benchmark::State& state) {
    std::vector<double> out(4096);
    for (auto _ : state) {
        kernels::for_each_index(
            out.size(),
            [&](std::size_t i) {
                double s = 0;
                for (int k = 1; k < 2000; ++k) s += std::sin(static_cast<double>(i * k));
                out[i] = s;
            },
            exec_of(state));
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_ForEachIndex)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Leiden(benchmark::State& state) {
    static const auto g = random_graph(10000, 50000, 3);
    kg::LeidenOptions opt;
    opt.exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(kg::leiden(g, opt).quality);
}
BENCHMARK(BM_Leiden)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
