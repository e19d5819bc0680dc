// Serial reference vs OpenMP kernels.
//
//   bench_kernels --benchmark_filter=Pearson

#include <benchmark/benchmark.h>

#include <vector>

#include "memdrop/kernels.hpp"
#include "memdrop/rng.hpp"

using namespace memdrop;

namespace {

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

template <auto Kernel>
void dot_scan(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto d = static_cast<std::size_t>(state.range(1));
    const auto rows = gaussian(n * d, 1);
    const auto q = gaussian(d, 2);
    std::vector<double> out(n);
    for (auto _ : state) {
        Kernel(rows, d, q, out);
        benchmark::DoNotOptimize(out.data());
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * d));
}

template <auto Kernel>
void pearson(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto d = static_cast<std::size_t>(state.range(1));
    const auto rows = gaussian(n * d, 3);
    std::vector<double> out(n * n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(Kernel(rows, d, out));
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * d / 2));
}

void scan_sizes(benchmark::internal::Benchmark* b) {
    for (long n : {64, 1024, 16384, 131072}) b->Args({n, 64});
}

void pearson_sizes(benchmark::internal::Benchmark* b) {
    for (long n : {64, 256, 1024}) b->Args({n, 64});
    b->Args({512, 300});
}

}  // namespace

BENCHMARK(dot_scan<kernels::serial::dot_scan>)->Name("DotScan/serial")->Apply(scan_sizes)->UseRealTime();
BENCHMARK(dot_scan<kernels::dot_scan>)->Name("DotScan/omp")->Apply(scan_sizes)->UseRealTime();
BENCHMARK(pearson<kernels::serial::pearson>)->Name("Pearson/serial")->Apply(pearson_sizes)->UseRealTime();
BENCHMARK(pearson<kernels::pearson>)->Name("Pearson/omp")->Apply(pearson_sizes)->UseRealTime();

BENCHMARK_MAIN();
