// Serial versus OpenMP kernels. Run with OMP_NUM_THREADS set to the core count.

#include <benchmark/benchmark.h>

#include <vector>

#include "unlearn/kernels.hpp"
#include "unlearn/rng.hpp"

using namespace unlearn;
namespace k = unlearn::kernels;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
    Rng rng(mix_seed(seed));
    std::vector<double> v(n);
    for (double& x : v) x = standard_normal(rng);
    return v;
}

// batch 64 through a 256 -> 256 layer, the shape of the default hidden layers
constexpr k::AffineShape kLayer{64, 256, 256};

template <auto Fn>
void affine_forward(benchmark::State& state) {
    const auto x = noise(kLayer.batch * kLayer.in, 1), w = noise(kLayer.out * kLayer.in, 2), b = noise(kLayer.out, 3);
    std::vector<double> y(kLayer.batch * kLayer.out);
    for (auto _ : state) {
        Fn(x, w, b, y, kLayer);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * kLayer.batch);
}

template <auto Fn>
void affine_input_grad(benchmark::State& state) {
    const auto dy = noise(kLayer.batch * kLayer.out, 4), w = noise(kLayer.out * kLayer.in, 5);
    std::vector<double> dx(kLayer.batch * kLayer.in);
    for (auto _ : state) {
        Fn(dy, w, dx, kLayer);
        benchmark::DoNotOptimize(dx.data());
    }
    state.SetItemsProcessed(state.iterations() * kLayer.batch);
}

template <auto Fn>
void affine_param_grad(benchmark::State& state) {
    const auto x = noise(kLayer.batch * kLayer.in, 6), dy = noise(kLayer.batch * kLayer.out, 7);
    std::vector<double> dw(kLayer.out * kLayer.in), db(kLayer.out);
    for (auto _ : state) {
        Fn(x, dy, dw, db, kLayer);
        benchmark::DoNotOptimize(dw.data());
    }
    state.SetItemsProcessed(state.iterations() * kLayer.batch);
}

template <auto Fn>
void nearest_centroid(benchmark::State& state) {
    const std::size_t n = 20000, dim = 600, clusters = static_cast<std::size_t>(state.range(0));
    const auto p = noise(n * dim, 8), c = noise(clusters * dim, 9);
    std::vector<int> labels(n);
    std::vector<double> dist(n);
    for (auto _ : state) {
        Fn(p, c, dim, labels, dist);
        benchmark::DoNotOptimize(labels.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <auto Fn>
void conv_forward(benchmark::State& state) {
    const k::ConvShape s{32, 8, 16, 16, 16};
    const auto x = noise(s.batch * s.in_ch * s.height * s.width, 10), w = noise(s.out_ch * s.in_ch * 9, 11),
               b = noise(s.out_ch, 12);
    std::vector<double> y(s.batch * s.out_ch * s.height * s.width);
    for (auto _ : state) {
        Fn(x, w, b, y, s);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.batch));
}

}  // namespace

BENCHMARK(affine_forward<k::serial::affine>)->Name("affine/serial")->UseRealTime();
BENCHMARK(affine_forward<k::parallel::affine>)->Name("affine/parallel")->UseRealTime();
BENCHMARK(affine_input_grad<k::serial::affine_input_grad>)->Name("affine_input_grad/serial")->UseRealTime();
BENCHMARK(affine_input_grad<k::parallel::affine_input_grad>)->Name("affine_input_grad/parallel")->UseRealTime();
BENCHMARK(affine_param_grad<k::serial::affine_param_grad>)->Name("affine_param_grad/serial")->UseRealTime();
BENCHMARK(affine_param_grad<k::parallel::affine_param_grad>)->Name("affine_param_grad/parallel")->UseRealTime();
BENCHMARK(nearest_centroid<k::serial::nearest_centroid>)->Name("nearest_centroid/serial")->UseRealTime()->Arg(10)->Arg(100);
BENCHMARK(nearest_centroid<k::parallel::nearest_centroid>)->Name("nearest_centroid/parallel")->UseRealTime()->Arg(10)->Arg(100);
BENCHMARK(conv_forward<k::serial::conv3x3>)->Name("conv3x3/serial")->UseRealTime();
BENCHMARK(conv_forward<k::parallel::conv3x3>)->Name("conv3x3/parallel")->UseRealTime();

BENCHMARK_MAIN();
