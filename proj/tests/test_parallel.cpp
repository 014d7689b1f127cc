#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fuseq/frontier.hpp"
#include "fuseq/oracle.hpp"
#include "test_support.hpp"

using namespace fuseq;
using fuseq_test::random_two_stage_test;

namespace {

Frontier random_frontier(std::mt19937_64& rng, size_t n) {
    std::uniform_real_distribution<double> u(1e-6, 1.0);
    Frontier f;
    f.atoms.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        f.atoms.push_back({u(rng), u(rng), 1 + rng() % 4});
    }
    return f;
}

bool atoms_identical(const std::vector<PathAtom>& a, const std::vector<PathAtom>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].w0 != b[i].w0 || a[i].w1 != b[i].w1 || a[i].count != b[i].count) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("parallel advance is bit-identical to the serial reference") {
    std::mt19937_64 rng(1234);
    const ConfusionMatrix step = ConfusionMatrix::binary(0.35, 0.65);
    const Thresholds th(0.4, 2.5);
    for (size_t n : {size_t(1), size_t(1000), size_t(100000)}) {
        const Frontier f = random_frontier(rng, n);
        const auto serial = advance_serial(f, step, th);
        const auto parallel = advance_parallel(f, step, th);
        CHECK(atoms_identical(serial.alive, parallel.alive));
        CHECK(atoms_identical(serial.escaped_low, parallel.escaped_low));
        CHECK(atoms_identical(serial.escaped_high, parallel.escaped_high));

        const auto dispatched = advance(f, step, th);
        CHECK(atoms_identical(serial.alive, dispatched.alive));
        CHECK(atoms_identical(serial.escaped_low, dispatched.escaped_low));
        CHECK(atoms_identical(serial.escaped_high, dispatched.escaped_high));
    }
}

TEST_CASE("parallel monte carlo is bit-identical to the serial schedule") {
    std::mt19937_64 rng(4321);
    const auto test = random_two_stage_test(rng, 10);
    // enough trials for several shards
    const auto par = oracle::monte_carlo_multistage(test, 1, 300000, 2024, true);
    const auto ser = oracle::monte_carlo_multistage(test, 1, 300000, 2024, false);
    REQUIRE(par.per_stage.size() == ser.per_stage.size());
    for (size_t s = 0; s < par.per_stage.size(); ++s) {
        CHECK(par.per_stage[s].stop_low_count == ser.per_stage[s].stop_low_count);
        CHECK(par.per_stage[s].stop_high_count == ser.per_stage[s].stop_high_count);
        CHECK(par.per_stage[s].sum_k == ser.per_stage[s].sum_k);
        CHECK(par.per_stage[s].sum_k_sq == ser.per_stage[s].sum_k_sq);
    }
}

TEST_CASE("run_multistage is reproducible run to run") {
    std::mt19937_64 rng(9999);
    const auto test = random_two_stage_test(rng, 12);
    const auto a = run_multistage(test);
    const auto b = run_multistage(test);
    CHECK(fuseq_test::max_report_delta(a, b) == 0.0);
    CHECK(a.alive_paths_at_horizon == b.alive_paths_at_horizon);
    CHECK(a.growth_base == b.growth_base);
}
