// Serial reference loops against their OpenMP counterparts.
//
//   ./bench_kernels --benchmark_filter=Regression
//   OMP_NUM_THREADS=4 ./bench_kernels

#include <vector>

#include <benchmark/benchmark.h>

#include "volterra/atoms.hpp"
#include "volterra/kernels.hpp"
#include "volterra/rng.hpp"

namespace k = volterra::kernels;

namespace {

Eigen::VectorXd input(Eigen::Index n) {
    volterra::Rng rng(1);
    Eigen::VectorXd x(n);
    for (auto& v : x) v = rng.uniform(-1, 1);
    return x;
}

volterra::VolterraKernels random_kernels(std::size_t memory) {
    volterra::Rng rng(2);
    volterra::VolterraKernels h(memory);
    for (auto& v : h.h1) v = rng.uniform(-1, 1);
    for (auto& v : h.h2.reshaped()) v = rng.uniform(-1, 1);
    return h;
}

std::vector<volterra::Complex> poles(std::size_t n) {
    const volterra::PoleGrid g = volterra::build_grid(8, 16, 0.1, 0.95);
    std::vector<volterra::Complex> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(g.poles[i % g.poles.size()].value());
    return out;
}

template <auto Fn>
void regression(benchmark::State& state) {
    const Eigen::VectorXd x = input(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(x, 30));
}

template <auto Fn>
void simulation(benchmark::State& state) {
    const Eigen::VectorXd x = input(state.range(0));
    const volterra::VolterraKernels h = random_kernels(60);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(h, x));
}

template <auto Fn>
void correlation(benchmark::State& state) {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(state.range(0), 4000);
    const Eigen::VectorXd r = input(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(a, r));
}

template <auto Fn>
void filters(benchmark::State& state) {
    const Eigen::VectorXd x = input(state.range(0));
    const auto p = poles(128);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(x, p, 150));
}

template <auto Filter, auto Outputs>
void atom_outputs(benchmark::State& state) {
    const Eigen::VectorXd x = input(state.range(0));
    const auto p = poles(128);
    const Eigen::MatrixXcd z = Filter(x, p, 150);
    std::vector<k::AtomSource> atoms;
    for (std::size_t i = 0; i < p.size(); ++i) atoms.push_back({i, k::AtomSource::kNone, 1.0});
    for (std::size_t i = 0; i < 2000; ++i) atoms.push_back({i % p.size(), (7 * i + 3) % p.size(), 1.0});
    for (auto _ : state) benchmark::DoNotOptimize(Outputs(z, atoms));
}

}  // namespace

BENCHMARK(regression<k::serial::regression_matrix>)->Name("Regression/serial")->Arg(200)->Arg(2000);
BENCHMARK(regression<k::parallel::regression_matrix>)->Name("Regression/parallel")->Arg(200)->Arg(2000);
BENCHMARK(simulation<k::serial::simulate>)->Name("Simulate/serial")->Arg(1000)->Arg(10000);
BENCHMARK(simulation<k::parallel::simulate>)->Name("Simulate/parallel")->Arg(1000)->Arg(10000);
BENCHMARK(correlation<k::serial::correlate>)->Name("Correlate/serial")->Arg(150)->Arg(1500);
BENCHMARK(correlation<k::parallel::correlate>)->Name("Correlate/parallel")->Arg(150)->Arg(1500);
BENCHMARK(filters<k::serial::filter_responses>)->Name("Filters/serial")->Arg(150)->Arg(1500);
BENCHMARK(filters<k::parallel::filter_responses>)->Name("Filters/parallel")->Arg(150)->Arg(1500);
BENCHMARK(atom_outputs<k::serial::filter_responses, k::serial::atom_outputs>)->Name("AtomOutputs/serial")->Arg(150)->Arg(1500);
BENCHMARK(atom_outputs<k::parallel::filter_responses, k::parallel::atom_outputs>)->Name("AtomOutputs/parallel")->Arg(150)->Arg(1500);

BENCHMARK_MAIN();
