#include <benchmark/benchmark.h>

#include <random>

#include "ister/attention.hpp"

namespace {

using namespace ister;

ad::DiffArray tokens(std::size_t count, std::size_t width, std::mt19937_64& rng)
{
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> values(count * width);
    for (auto& x : values) x = dist(rng);
    return ad::DiffArray::from({1, count, width}, std::move(values));
}

void BM_DotCore(benchmark::State& state)
{
    const auto count = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    auto q = tokens(count, 64, rng);
    auto k = tokens(count, 64, rng);
    auto v = tokens(count, 64, rng);
    for (auto _ : state) benchmark::DoNotOptimize(attention::dot_attention_core(q, k, v));
    state.counters["ops"] = static_cast<double>(attention::count_ops(attention::Mechanism::dot, count, 64).total());
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DotCore)->RangeMultiplier(2)->Range(16, 1024)->Complexity(benchmark::oN);

void BM_MultiHeadCore(benchmark::State& state)
{
    const auto count = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    auto q = tokens(count, 64, rng);
    auto k = tokens(count, 64, rng);
    auto v = tokens(count, 64, rng);
    for (auto _ : state) benchmark::DoNotOptimize(attention::scaled_dot_product_core(q, k, v, 8));
    state.counters["ops"] =
        static_cast<double>(attention::count_ops(attention::Mechanism::multihead, count, 64).total());
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MultiHeadCore)->RangeMultiplier(2)->Range(16, 1024)->Complexity(benchmark::oNSquared);

void BM_DotAttentionWithProjections(benchmark::State& state)
{
    const auto count = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(2);
    auto params = attention::QKVParams::init(64, rng);
    auto x = tokens(count, 64, rng);
    for (auto _ : state) benchmark::DoNotOptimize(attention::dot_attention(x, params).output);
}
BENCHMARK(BM_DotAttentionWithProjections)->RangeMultiplier(4)->Range(16, 1024);

} // namespace
