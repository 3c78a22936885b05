#include <benchmark/benchmark.h>

#include "ister/autodiff/ops.hpp"
#include "ister/backbone.hpp"
#include "ister/dataset.hpp"

namespace {

using namespace ister;

model::ModelConfig config(std::size_t lookback, std::size_t channels, model::Variant variant)
{
    model::ModelConfig c;
    c.lookback = lookback;
    c.horizon = 96;
    c.channels = channels;
    c.width = 64;
    c.top_k = 3;
    c.blocks = 2;
    c.dropout = 0.0;
    return model::ablation_variant(c, variant);
}

Matrix input(std::size_t lookback, std::size_t channels)
{
    data::MultiPeriodicSpec spec;
    spec.length = lookback;
    spec.channels = channels;
    spec.periods = {24.0, 12.0};
    spec.amplitudes = {1.0, 0.5};
    spec.noise_sd = 0.1;
    spec.seed = 3;
    return data::synth_multiperiodic(spec).values;
}

void BM_Forward(benchmark::State& state, model::Variant variant)
{
    const auto lookback = static_cast<std::size_t>(state.range(0));
    const auto m = model::IsterModel::init(config(lookback, 7, variant), 1);
    const auto x = input(lookback, 7);
    for (auto _ : state) benchmark::DoNotOptimize(m.forward(x).prediction);
}
BENCHMARK_CAPTURE(BM_Forward, full, model::Variant::full)->Arg(96)->Arg(192)->Arg(336);
BENCHMARK_CAPTURE(BM_Forward, plus_msa, model::Variant::plus_msa)->Arg(96)->Arg(192)->Arg(336);

void BM_ForwardBackward(benchmark::State& state)
{
    const auto m = model::IsterModel::init(config(96, 7, model::Variant::full), 1);
    const auto x = input(96, 7);
    for (auto _ : state) {
        ad::Tape tape;
        auto y = m.forward_diff(x);
        tape.backward(ad::mean_all(ad::mul(y, y)));
    }
}
BENCHMARK(BM_ForwardBackward);

} // namespace

BENCHMARK_MAIN();
