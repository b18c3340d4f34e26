// Serial reference triple loop against the row kernel and its OpenMP variant.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "selqa/kernels.hpp"

using namespace selqa;

namespace {

struct Operands {
    std::vector<float> a, b, c;
};

Operands make(std::size_t m, std::size_t n, std::size_t k) {
    std::mt19937_64 rng(1);
    std::normal_distribution<float> g;
    Operands o{std::vector<float>(m * k), std::vector<float>(k * n), std::vector<float>(m * n)};
    for (auto& v : o.a) v = g(rng);
    for (auto& v : o.b) v = g(rng);
    return o;
}

enum class Variant { Serial, Dispatch, Omp };

template <Variant V>
void bm_gemm(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto k = static_cast<std::size_t>(state.range(1));
    const auto n = static_cast<std::size_t>(state.range(2));
    auto o = make(m, n, k);
    kernels::GemmShape s{m, n, k, false, false, false};
    kernels::set_threads(state.range(3) > 0 ? static_cast<int>(state.range(3)) : 1);
    for (auto _ : state) {
        if constexpr (V == Variant::Serial) kernels::serial::gemm<float>(s, o.a, o.b, o.c);
        else if constexpr (V == Variant::Dispatch) kernels::gemm<float>(s, o.a, o.b, o.c);
        else kernels::omp::gemm<float>(s, o.a, o.b, o.c);
        benchmark::DoNotOptimize(o.c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * m * n * k));
    kernels::set_threads(1);
}

// Shapes met in training: GRU input projections, CNN convolution, AP bilinear form.
const std::vector<std::vector<std::int64_t>> kShapes = {{40, 300, 141}, {39, 600, 100}, {40, 282, 282}, {256, 256, 256}};

void single(benchmark::internal::Benchmark* b) {
    for (auto shape : kShapes) {
        shape.push_back(1);
        b->Args(shape);
    }
}

void threaded(benchmark::internal::Benchmark* b) {
    for (std::int64_t threads : {1, 2, 4})
        for (auto shape : kShapes) {
            shape.push_back(threads);
            b->Args(shape);
        }
}

}  // namespace

BENCHMARK(bm_gemm<Variant::Serial>)->Apply(single)->ArgNames({"m", "k", "n", "threads"});
BENCHMARK(bm_gemm<Variant::Dispatch>)->Apply(single)->ArgNames({"m", "k", "n", "threads"});
BENCHMARK(bm_gemm<Variant::Omp>)->Apply(threaded)->ArgNames({"m", "k", "n", "threads"})->UseRealTime();

BENCHMARK_MAIN();
