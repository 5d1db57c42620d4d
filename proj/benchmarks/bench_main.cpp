#include <benchmark/benchmark.h>

#include <random>

#include "conecpt/optimizer.hpp"
#include "support.hpp"

using namespace conecpt;
using testing_support::vec;

namespace {

// dual generators via double description, d = 2..6
void BM_DualGenerators(benchmark::State& state)
{
    auto d = static_cast<std::size_t>(state.range(0));
    Vector prices = Vector::LinSpaced(static_cast<Eigen::Index>(d), 1.0, 2.0);
    auto pi = BidAskMatrix::proportional(prices, 0.05);
    for (auto _ : state) {
        auto cone = SolvencyCone::from_bid_ask(pi);
        benchmark::DoNotOptimize(cone.dual_generators().size());
    }
}
BENCHMARK(BM_DualGenerators)->DenseRange(2, 6);

void BM_Membership(benchmark::State& state)
{
    auto cone = testing_support::kabanov(0.1, 4);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    std::vector<Vector> xs(256);
    for (auto& x : xs)
        x = Vector::NullaryExpr(4, [&] { return n(rng); });
    std::size_t i = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(cone.contains(xs[i++ % xs.size()]));
}
BENCHMARK(BM_Membership);

void BM_CptValue(benchmark::State& state)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    auto k = static_cast<std::size_t>(state.range(0));
    std::vector<double> v(k), p(k, 1.0 / static_cast<double>(k));
    for (auto& x : v)
        x = n(rng);
    DiscreteDistribution dist(v, p);
    auto prefs = testing_support::default_cpt();
    for (auto _ : state)
        benchmark::DoNotOptimize(prefs.evaluate(dist));
}
BENCHMARK(BM_CptValue)->RangeMultiplier(4)->Range(4, 4096);

void BM_Oracle(benchmark::State& state)
{
    auto tree = testing_support::reference_instance();
    OracleOptions opt;
    opt.grid = {state.range(0) == 0 ? 0.5 : 0.25, 1.0};
    opt.threads = 1;
    for (auto _ : state) {
        auto r = oracle_optimize(tree, testing_support::reference_endowment(), testing_support::default_cpt(), 0, opt);
        benchmark::DoNotOptimize(r.value);
    }
}
BENCHMARK(BM_Oracle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Cps(benchmark::State& state)
{
    auto tree = testing_support::binary_tree(0.2, -0.1, static_cast<std::size_t>(state.range(0)), 0.05);
    for (auto _ : state)
        benchmark::DoNotOptimize(find_cps(tree).feasible);
}
BENCHMARK(BM_Cps)->DenseRange(1, 5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
