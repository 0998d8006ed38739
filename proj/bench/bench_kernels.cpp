#include <benchmark/benchmark.h>

#include <random>

#include "activegp/gp.hpp"
#include "activegp/kernels.hpp"

using namespace activegp;

namespace {

Matrix random_points(Index rows, Index cols, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            m(i, j) = u(rng);
    return m;
}

Hyperparameters hyp(Index dim)
{
    Hyperparameters h;
    h.signal_variance = 1.3;
    h.lengthscales = Vector::LinSpaced(dim, 0.6, 1.5);
    h.noise_variance = 1e-3;
    return h;
}

constexpr Index kDim = 6;

template <class Fn>
void gram_case(benchmark::State& state, Fn fn)
{
    const Matrix x = random_points(state.range(0), kDim, 1);
    const Hyperparameters h = hyp(kDim);
    for (auto _ : state)
        benchmark::DoNotOptimize(fn(x, h));
    state.SetComplexityN(state.range(0));
}

template <class Fn>
void cross_case(benchmark::State& state, Fn fn)
{
    const Matrix a = random_points(state.range(0), kDim, 2);
    const Matrix b = random_points(256, kDim, 3);
    const Hyperparameters h = hyp(kDim);
    for (auto _ : state)
        benchmark::DoNotOptimize(fn(a, b, h));
}

template <class Fn>
void posterior_case(benchmark::State& state, Fn fn)
{
    const Index n = state.range(0);
    const Matrix x = random_points(n, kDim, 4);
    const Matrix y = random_points(n, 1, 5);
    const GPModel m = fit(Dataset(x, y), {hyp(kDim)});
    const Matrix q = random_points(2000, kDim, 6);
    Vector mean(q.rows()), var(q.rows());
    for (auto _ : state) {
        fn(m.output(0), x, q, mean, var);
        benchmark::DoNotOptimize(var.data());
    }
    state.SetItemsProcessed(state.iterations() * q.rows());
}

void BM_GramSerial(benchmark::State& s) { gram_case(s, kernels::serial::gram); }
void BM_GramParallel(benchmark::State& s) { gram_case(s, kernels::parallel::gram); }
void BM_CrossSerial(benchmark::State& s) { cross_case(s, kernels::serial::cross_covariance); }
void BM_CrossParallel(benchmark::State& s) { cross_case(s, kernels::parallel::cross_covariance); }
void BM_PosteriorSerial(benchmark::State& s) { posterior_case(s, kernels::serial::posterior); }
void BM_PosteriorParallel(benchmark::State& s) { posterior_case(s, kernels::parallel::posterior); }

} // namespace

BENCHMARK(BM_GramSerial)->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_GramParallel)->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_CrossSerial)->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_CrossParallel)->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_PosteriorSerial)->RangeMultiplier(2)->Range(64, 256);
BENCHMARK(BM_PosteriorParallel)->RangeMultiplier(2)->Range(64, 256);

BENCHMARK_MAIN();
