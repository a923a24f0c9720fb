// Serial reference vs OpenMP node-parallel kernels.
#include <random>

#include <benchmark/benchmark.h>

#include "interpkit/jmethod.hpp"
#include "interpkit/kernels.hpp"

using namespace interpkit;

namespace {

struct Fixture {
    LogGrid grid;
    CouplePair pair;
    NodeField u;
    Vec lambda;
    Mat moments;

    explicit Fixture(std::size_t n)
        : grid(make_grid(1e-6, 1e6, n)),
          pair(NormSpec(NormKind::L1, Vec::Ones(3)), NormSpec(NormKind::Linf, Vec::LinSpaced(3, 0.25, 4.0)))
    {
        std::mt19937_64 rng(1);
        std::normal_distribution<double> N(0.0, 1.0);
        u.resize(Eigen::Index(n), 3);
        for (Eigen::Index k = 0; k < u.rows(); ++k)
            for (Eigen::Index i = 0; i < 3; ++i)
                u(k, i) = N(rng);
        lambda = Vec::Ones(3);
        moments.resize(4, Eigen::Index(n));
        for (Eigen::Index k = 0; k < moments.cols(); ++k) {
            const double l = std::log(grid[std::size_t(k)]);
            moments.col(k) << 1.0, l, l * l, std::sin(l);
        }
    }
};

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::Parallel : Exec::Serial; }

void BM_j_values(benchmark::State& s)
{
    const Fixture f(std::size_t(s.range(0)));
    std::vector<double> out;
    for (auto _ : s) {
        j_values(f.grid, f.u, f.pair, out, exec_of(s));
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_dual_profile(benchmark::State& s)
{
    const Fixture f(std::size_t(s.range(0)));
    std::vector<double> out;
    for (auto _ : s) {
        dual_profile(f.grid, f.lambda, f.pair, 0.5, out, exec_of(s));
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_haar_moments(benchmark::State& s)
{
    const Fixture f(std::size_t(s.range(0)));
    for (auto _ : s) {
        Mat m = haar_moments(f.grid, f.moments, f.u, exec_of(s));
        benchmark::DoNotOptimize(m.data());
    }
}

void BM_jnorm_solver(benchmark::State& s)
{
    const Fixture f(std::size_t(s.range(0)));
    SolverOptions o;
    o.exec = exec_of(s);
    Vec x(3);
    x << 1.0, -0.5, 2.0;
    for (auto _ : s) {
        const JNormResult r = jnorm(x, f.pair, ThetaQ::make(0.5, 2.0), f.grid, JMethod::Solver, o);
        benchmark::DoNotOptimize(r.value);
    }
}

// second argument: 0 serial, 1 parallel
void sizes(benchmark::internal::Benchmark* b)
{
    for (int n : {277, 1201, 8001})
        for (int p : {0, 1})
            b->Args({n, p});
}

} // namespace

BENCHMARK(BM_j_values)->Apply(sizes);
BENCHMARK(BM_dual_profile)->Apply(sizes);
BENCHMARK(BM_haar_moments)->Apply(sizes);
BENCHMARK(BM_jnorm_solver)->Args({277, 0})->Args({277, 1})->Args({1201, 0})->Args({1201, 1})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
