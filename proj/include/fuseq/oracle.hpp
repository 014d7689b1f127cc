#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fuseq/fusion_network.hpp"
#include "fuseq/multistage.hpp"

namespace fuseq {
namespace oracle {

/// Exhaustively enumerates every decision sequence in {0,1}^N and replays
/// the multi-stage trajectory semantics path by path (depth-first walk,
/// no likelihood sets, no coalescing). Deliberately pays the exponential
/// cost the frontier engine avoids; shares none of its machinery so that
/// agreement between the two is evidence.
/// Refuses horizons above 20 with a cost estimate.
MultiStageReport brute_force_multistage(const MultiStageTest& test);

struct McQuantity {
    double estimate = 0.0;
    double std_error = 0.0;
};

struct McStageReport {
    int horizon = 0;
    std::vector<std::uint64_t> stop_low_count;   // [k], k in [1, N+1]
    std::vector<std::uint64_t> stop_high_count;  // [k]
    std::uint64_t trials = 0;

    McQuantity stop_low(int k) const;
    McQuantity stop_high(int k) const;
    /// Cumulative high-crossing probability by time k.
    McQuantity cum_high(int k) const;
    McQuantity expected_k() const;

    std::uint64_t sum_k = 0;
    std::uint64_t sum_k_sq = 0;
};

/// Simulation estimate of a MultiStageReport for one hypothesis.
/// Bit-reproducible for a fixed (seed, trials): trials are split into
/// fixed-size shards with per-shard generators derived from the master
/// seed, and all tallies are integers, so the reduction order cannot
/// change any result. The parallel and serial schedules are identical.
struct MonteCarloReport {
    int hypothesis = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    std::string generator;  // recorded generator contract
    std::vector<McStageReport> per_stage;

    /// P(final decision = detection | hypothesis): the P_D' estimate under
    /// H=1 and the P_F' estimate under H=0.
    McQuantity final_high() const;
};

MonteCarloReport monte_carlo_multistage(const MultiStageTest& test, int hypothesis,
                                        std::uint64_t trials, std::uint64_t seed,
                                        bool parallel = true);

/// Joint-enumeration oracle for the static layer: walks all m^(#sensors)
/// joint sensor outcomes, pushes each through the fusion centers in
/// topological order carrying majority tie distributions as weights, and
/// tallies exact P(D=.|H). Refuses more than 15 sensors.
ConfusionMatrix brute_force_network(const FusionNetwork& net,
                                    const std::map<std::string, ConfusionMatrix>& sensor_models = {});

}  // namespace oracle
}  // namespace fuseq
