#include <benchmark/benchmark.h>

#include "radsynth/common/rng.hpp"
#include "radsynth/evalmetrics/frechet.hpp"
#include "radsynth/memaudit/similarity.hpp"
#include "radsynth/neuralcore/denoiser.hpp"
#include "radsynth/neuralcore/layers.hpp"
#include "radsynth/turingstats/stats.hpp"

using namespace radsynth;

namespace {

nn::Tensor4 noise(nn::Shape4 s, std::uint64_t seed) {
    Rng rng(seed);
    nn::Tensor4 t(s);
    for (auto& v : t.values()) v = rng.normal();
    return t;
}

eval::FeatureTable table(const std::string& prefix, Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    Rng rng(seed);
    eval::FeatureTable t;
    t.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        t.ids.push_back(prefix + std::to_string(i));
        for (Eigen::Index j = 0; j < d; ++j) t.features(i, j) = rng.normal();
    }
    return t;
}

void BM_Conv3x3(benchmark::State& state) {
    const auto ch = static_cast<std::size_t>(state.range(0));
    const auto x = noise({8, ch, 16, 16}, 1);
    nn::ConvGeometry g{ch, ch, 3, 1, 1};
    const std::vector<double> w(g.weight_count(), 0.01), b(ch, 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(x, w, b, g));
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(32)->Arg(64);

void BM_DenoiserForward(benchmark::State& state) {
    const auto model = nn::DenoiserModel::create({}, {1, false});
    const auto x = noise({8, 1, 16, 16}, 2);
    const std::vector<int> t{1, 100, 200, 300, 400, 500, 600, 700};
    for (auto _ : state) benchmark::DoNotOptimize(nn::denoiser_forward(model, x, t));
}
BENCHMARK(BM_DenoiserForward);

void BM_DenoiserBackward(benchmark::State& state) {
    const auto model = nn::DenoiserModel::create({}, {1, false});
    const auto x = noise({8, 1, 16, 16}, 3);
    const auto g = noise({8, 1, 16, 16}, 4);
    const std::vector<int> t{1, 100, 200, 300, 400, 500, 600, 700};
    for (auto _ : state) benchmark::DoNotOptimize(nn::denoiser_backward(model, x, t, g));
}
BENCHMARK(BM_DenoiserBackward);

void BM_TopK(benchmark::State& state) {
    const auto n = state.range(0);
    const auto r = table("r", n, 64, 5), s = table("s", n, 64, 6);
    for (auto _ : state) benchmark::DoNotOptimize(audit::top_k_pairs(r, s, 100));
    state.SetComplexityN(n * n);
}
BENCHMARK(BM_TopK)->Arg(100)->Arg(500)->Arg(1000);

void BM_WilcoxonExact(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<double> x(n), y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) x[i] = (i % 3 == 0 ? -1.0 : 1.0) * (static_cast<double>(i) + 1.5);
    for (auto _ : state) benchmark::DoNotOptimize(turing::wilcoxon_signed_rank(x, y));
}
BENCHMARK(BM_WilcoxonExact)->Arg(8)->Arg(25);

void BM_Frechet(benchmark::State& state) {
    const auto d = state.range(0);
    const auto a = eval::fit_moments(table("a", 2000, d, 7).features);
    const auto b = eval::fit_moments(table("b", 2000, d, 8).features);
    for (auto _ : state) benchmark::DoNotOptimize(eval::frechet_distance(a, b));
}
BENCHMARK(BM_Frechet)->Arg(64)->Arg(256);

}  // namespace
BENCHMARK_MAIN();
