// Kernel benchmark: serial reference vs OpenMP implementations.
// Usage: fuseq-bench [--atoms N] [--reps R] [--trials T]
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fuseq/frontier.hpp"
#include "fuseq/multistage.hpp"
#include "fuseq/oracle.hpp"

using namespace fuseq;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Frontier make_frontier(std::mt19937_64& rng, size_t n) {
    std::uniform_real_distribution<double> u(1e-6, 1.0);
    Frontier f;
    f.atoms.reserve(n);
    for (size_t i = 0; i < n; ++i) f.atoms.push_back({u(rng), u(rng), 1});
    return f;
}

template <typename Fn>
double best_of(int reps, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_seconds();
        fn();
        best = std::min(best, now_seconds() - t0);
    }
    return best;
}

MultiStageTest bench_test(int n) {
    MultiStageTest test;
    test.stages.resize(2);
    for (int k = 0; k < n; ++k) {
        test.stages[0].steps.push_back(ConfusionMatrix::binary(0.42, 0.58));
        test.stages[1].steps.push_back(ConfusionMatrix::binary(0.35, 0.65));
    }
    test.stages[0].thresholds = Thresholds(0.55, 1.9);
    test.stages[1].thresholds = Thresholds(0.05, 12.0);
    return test;
}

}  // namespace

int main(int argc, char** argv) {
    size_t atoms = 1u << 21;
    int reps = 5;
    std::uint64_t trials = 2000000;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--atoms") == 0 && i + 1 < argc) {
            atoms = std::strtoull(argv[++i], nullptr, 10);
        } else if (std::strcmp(argv[i], "--reps") == 0 && i + 1 < argc) {
            reps = std::atoi(argv[++i]);
        } else if (std::strcmp(argv[i], "--trials") == 0 && i + 1 < argc) {
            trials = std::strtoull(argv[++i], nullptr, 10);
        } else {
            std::fprintf(stderr, "unknown argument: %s\n", argv[i]);
            return 1;
        }
    }

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (built without OpenMP)\n");
#endif

    std::mt19937_64 rng(12345);
    const ConfusionMatrix step = ConfusionMatrix::binary(0.35, 0.65);
    const Thresholds th(0.4, 2.5);

    std::printf("%-28s %12s %12s %10s\n", "kernel", "serial [s]", "parallel [s]", "speedup");
    for (size_t n : {atoms / 16, atoms / 4, atoms}) {
        const Frontier f = make_frontier(rng, n);
        AdvanceResult sink;
        const double ts = best_of(reps, [&] { sink = advance_serial(f, step, th); });
        const double tp = best_of(reps, [&] { sink = advance_parallel(f, step, th); });
        char label[64];
        std::snprintf(label, sizeof(label), "advance (%zu atoms)", n);
        std::printf("%-28s %12.4f %12.4f %9.2fx\n", label, ts, tp, ts / tp);
    }

    {
        const auto test = bench_test(20);
        oracle::MonteCarloReport sink;
        const double ts = best_of(std::max(1, reps / 2), [&] {
            sink = oracle::monte_carlo_multistage(test, 1, trials, 7, false);
        });
        const double tp = best_of(std::max(1, reps / 2), [&] {
            sink = oracle::monte_carlo_multistage(test, 1, trials, 7, true);
        });
        char label[64];
        std::snprintf(label, sizeof(label), "monte carlo (%llu trials)",
                      static_cast<unsigned long long>(trials));
        std::printf("%-28s %12.4f %12.4f %9.2fx\n", label, ts, tp, ts / tp);
    }

    {
        const auto test = bench_test(22);
        const double t_off = best_of(std::max(1, reps / 2), [&] {
            (void)run_multistage(test, CoalesceMode::off());
        });
        const double t_exact = best_of(std::max(1, reps / 2), [&] {
            (void)run_multistage(test, CoalesceMode::exact());
        });
        std::printf("%-28s %12.4f %12.4f %9.2fx  (full run, N = 22)\n",
                    "coalescing off vs exact", t_off, t_exact, t_off / t_exact);
    }

    return 0;
}
