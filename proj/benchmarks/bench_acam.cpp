#include <benchmark/benchmark.h>

#include <random>

#include "acam/analysis.hpp"
#include "acam/fewshot.hpp"
#include "acam/kernel.hpp"
#include "acam/search.hpp"

using namespace acam;

namespace {

AcamArray random_array(std::size_t m, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.3, 2.0);
    std::vector<MatchWindow> w;
    for (std::size_t i = 0; i < m * d; ++i) w.push_back(make_window(u(rng), 0.4));
    return AcamArray(m, d, std::move(w));
}

void BM_AnalogHamming(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const AcamArray a = random_array(m, 64, 1);
    const std::vector<double> q(64, 0.8);
    for (auto _ : state) benchmark::DoNotOptimize(analog_hamming(a, q));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(m * 64));
}
BENCHMARK(BM_AnalogHamming)->Arg(25)->Arg(64)->Arg(1024);

void BM_Fit(benchmark::State& state) {
    const auto data = make_dataset({.n_train = static_cast<std::size_t>(state.range(0))}, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit(data.train_x, data.train_y, {KernelKind::AcamSurrogate, 0.1, 1.0}, 1e-3));
    }
}
BENCHMARK(BM_Fit)->Arg(64)->Arg(256);

const KernelModel& model64() {
    static const KernelModel model = [] {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        RowMatrix x(64, 64);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
        return fit(x, Eigen::VectorXd::LinSpaced(64, -1, 1), {KernelKind::AcamSurrogate, 2.0, 1.0}, 1e-3);
    }();
    return model;
}

void BM_PredictExact64x64(benchmark::State& state) {
    const std::vector<double> q(64, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(predict_exact(model64(), q));
    state.counters["ops"] = static_cast<double>(op_count(64, 64, OpMode::ExactSoftware));
}
BENCHMARK(BM_PredictExact64x64);

void BM_PredictAcam64x64(benchmark::State& state) {
    const AcamKernelMachine machine(model64(), {4, {}, {}, 0.0});
    const std::vector<double> q(64, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(machine.predict(q));
}
BENCHMARK(BM_PredictAcam64x64);

void BM_FewshotEpisode(benchmark::State& state) {
    const auto table = synth_embeddings(20, 20, 64, 0.4, 7);
    Rng rng = make_rng(1);
    const Episode ep = sample_episode(table, 5, 5, rng);
    for (auto _ : state) benchmark::DoNotOptimize(classify(ep, {}));
}
BENCHMARK(BM_FewshotEpisode);

void BM_SenseMargin(benchmark::State& state) {
    DensityConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(sense_margin(static_cast<int>(state.range(0)), cfg));
}
BENCHMARK(BM_SenseMargin)->DenseRange(1, 6);

}  // namespace
BENCHMARK_MAIN();
