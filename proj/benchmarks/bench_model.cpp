#include <oksir/batch_reference.hpp>
#include <oksir/model.hpp>
#include <oksir/simgen.hpp>

#include <benchmark/benchmark.h>

using namespace oksir;

namespace {

// Model that has already seen `warm` samples, plus the stream continuing after them.
struct Prepared {
    OksirModel model{ModelConfig{}};
    SimTable rest;
};

Prepared prepare(int p, long warm, long extra) {
    const SimTable t = to_table(simulate({SimModel::linear_ratio, p, warm + extra, 1}));
    Prepared out;
    for (Eigen::Index i = 0; i < warm; ++i) out.model.partial_fit(t.x.row(i).transpose(), t.y[i]);
    out.rest.x = t.x.bottomRows(extra);
    out.rest.y = t.y.tail(extra);
    return out;
}

// Steady-state cost of one streaming update after the dictionary has plateaued.
void BM_PartialFit(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    constexpr long kExtra = 4000;
    Prepared prep = prepare(p, 2000, kExtra);
    Eigen::Index i = 0;
    for (auto _ : state) {
        prep.model.partial_fit(prep.rest.x.row(i).transpose(), prep.rest.y[i]);
        if (++i == kExtra) i = 0;
    }
    state.counters["dict"] = static_cast<double>(prep.model.dictionary().size());
}
BENCHMARK(BM_PartialFit)->Arg(10)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_Transform(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    Prepared prep = prepare(p, 2000, 256);
    Eigen::Index i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(prep.model.transform(prep.rest.x.row(i).transpose()));
        i = (i + 1) % 256;
    }
}
BENCHMARK(BM_Transform)->Arg(10)->Arg(100)->Unit(benchmark::kMicrosecond);

// Batch baseline on n points, for the cost contrast with streaming.
void BM_BatchKsir(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    const SimTable t = to_table(simulate({SimModel::sine_product, 10, n, 2}));
    const std::vector<double> ys(t.y.data(), t.y.data() + n);
    for (auto _ : state) benchmark::DoNotOptimize(batch_ksir(t.x, ys, KernelConfig(), BatchOptions{}));
}
BENCHMARK(BM_BatchKsir)->Arg(250)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
