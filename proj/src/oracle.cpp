#include "fuseq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fuseq {
namespace oracle {

namespace {

constexpr int kMaxBruteForceHorizon = 20;

struct Buckets {
    // [stage][kind(0=low,1=high)][h][k]
    std::vector<std::vector<std::array<std::vector<KahanSum>, 2>>> acc;
    std::vector<std::vector<std::uint64_t>> alive;          // [stage][k]
    std::vector<std::array<std::vector<KahanSum>, 2>> live;  // [stage][h][k]

    Buckets(int stages, int n) {
        acc.resize(static_cast<size_t>(stages));
        alive.assign(static_cast<size_t>(stages),
                     std::vector<std::uint64_t>(static_cast<size_t>(n) + 2, 0));
        live.resize(static_cast<size_t>(stages));
        for (auto& st : acc) {
            st.resize(2);
            for (auto& kind : st) {
                kind[0].resize(static_cast<size_t>(n) + 2);
                kind[1].resize(static_cast<size_t>(n) + 2);
            }
        }
        for (auto& st : live) {
            st[0].resize(static_cast<size_t>(n) + 2);
            st[1].resize(static_cast<size_t>(n) + 2);
        }
    }

    void record(int stage, int kind, int k, double w0, double w1) {
        acc[static_cast<size_t>(stage)][static_cast<size_t>(kind)][0][static_cast<size_t>(k)].add(
            w0);
        acc[static_cast<size_t>(stage)][static_cast<size_t>(kind)][1][static_cast<size_t>(k)].add(
            w1);
    }
};

// Depth-first replay of one decision subtree. `stage` is the stage whose
// network produced the decision at the *next* step.
void walk_paths(const MultiStageTest& test, int k, double w0, double w1, int stage,
                Buckets& buckets) {
    const int n = test.horizon();
    const int s_count = test.stage_count();

    if (k == n) {
        // Leftover path: forced decision at N+1 against the current
        // stage's midpoint; the decided mass also lands in every later
        // stage's N+1 bucket.
        const double mid = test.stages[static_cast<size_t>(stage)].thresholds.midpoint();
        const int kind = (w1 >= mid * w0) ? 1 : 0;
        for (int s = stage; s < s_count; ++s) buckets.record(s, kind, n + 1, w0, w1);
        return;
    }

    const auto& step = test.stages[static_cast<size_t>(stage)].steps[static_cast<size_t>(k)];
    for (int d = 0; d < 2; ++d) {
        const double c0 = w0 * step(d, 0);
        const double c1 = w1 * step(d, 1);
        if (c0 == 0.0 && c1 == 0.0) continue;  // zero-probability path

        int s = stage;
        bool decided = false;
        while (true) {
            const auto& th = test.stages[static_cast<size_t>(s)].thresholds;
            int kind;
            if (c1 <= th.eta0 * c0) {
                kind = 0;
            } else if (c1 >= th.eta1 * c0) {
                kind = 1;
            } else {
                break;  // inside stage s's band; path continues there
            }
            buckets.record(s, kind, k + 1, c0, c1);
            if (s == s_count - 1) {
                decided = true;
                break;
            }
            ++s;
        }
        if (!decided) {
            buckets.alive[static_cast<size_t>(s)][static_cast<size_t>(k + 1)]++;
            buckets.live[static_cast<size_t>(s)][0][static_cast<size_t>(k + 1)].add(c0);
            buckets.live[static_cast<size_t>(s)][1][static_cast<size_t>(k + 1)].add(c1);
            walk_paths(test, k + 1, c0, c1, s, buckets);
        }
    }
}

}  // namespace

MultiStageReport brute_force_multistage(const MultiStageTest& test) {
    test.validate();
    const int n = test.horizon();
    if (n > kMaxBruteForceHorizon) {
        const double nodes = std::ldexp(static_cast<double>(n), n);
        fail("brute_force_multistage: refusing horizon " + std::to_string(n) + " (about " +
             std::to_string(nodes) + " path-step visits; limit is N <= " +
             std::to_string(kMaxBruteForceHorizon) + ")");
    }
    const int s_count = test.stage_count();

    Buckets buckets(s_count, n);
    walk_paths(test, 0, 1.0, 1.0, 0, buckets);

    MultiStageReport out;
    out.per_stage.resize(static_cast<size_t>(s_count));
    for (int s = 0; s < s_count; ++s) {
        StageReport& rep = out.per_stage[static_cast<size_t>(s)];
        rep.horizon = n;
        for (int h = 0; h < 2; ++h) {
            rep.stop_low[static_cast<size_t>(h)].assign(static_cast<size_t>(n) + 2, 0.0);
            rep.stop_high[static_cast<size_t>(h)].assign(static_cast<size_t>(n) + 2, 0.0);
            for (int k = 1; k <= n + 1; ++k) {
                rep.stop_low[static_cast<size_t>(h)][static_cast<size_t>(k)] =
                    buckets.acc[static_cast<size_t>(s)][0][static_cast<size_t>(h)]
                               [static_cast<size_t>(k)]
                                   .value();
                rep.stop_high[static_cast<size_t>(h)][static_cast<size_t>(k)] =
                    buckets.acc[static_cast<size_t>(s)][1][static_cast<size_t>(h)]
                               [static_cast<size_t>(k)]
                                   .value();
            }
        }
        rep.pd_cum.assign(static_cast<size_t>(n) + 2, 0.0);
        rep.pf_cum.assign(static_cast<size_t>(n) + 2, 0.0);
        KahanSum pd, pf;
        for (int k = 1; k <= n + 1; ++k) {
            pd.add(rep.stop_high[1][static_cast<size_t>(k)]);
            pf.add(rep.stop_high[0][static_cast<size_t>(k)]);
            rep.pd_cum[static_cast<size_t>(k)] = pd.value();
            rep.pf_cum[static_cast<size_t>(k)] = pf.value();
        }
        rep.alive_count = buckets.alive[static_cast<size_t>(s)];
        for (int h = 0; h < 2; ++h) {
            rep.alive_mass[static_cast<size_t>(h)].assign(static_cast<size_t>(n) + 2, 0.0);
            for (int k = 1; k <= n; ++k) {
                rep.alive_mass[static_cast<size_t>(h)][static_cast<size_t>(k)] =
                    buckets.live[static_cast<size_t>(s)][static_cast<size_t>(h)]
                                [static_cast<size_t>(k)]
                                    .value();
            }
        }
        rep.expected_k[0] = expected_stopping_time(rep, 0);
        rep.expected_k[1] = expected_stopping_time(rep, 1);
    }

    out.alive_paths_at_horizon = 0;
    for (int s = 0; s < s_count; ++s) {
        out.alive_paths_at_horizon += buckets.alive[static_cast<size_t>(s)][static_cast<size_t>(n)];
    }
    out.pd_final = out.final_stage().pd_cum[static_cast<size_t>(n) + 1];
    out.pf_final = out.final_stage().pf_cum[static_cast<size_t>(n) + 1];
    out.growth_base = growth_base(out, n);
    return out;
}

McQuantity McStageReport::stop_low(int k) const {
    const double p = static_cast<double>(stop_low_count[static_cast<size_t>(k)]) / trials;
    return {p, std::sqrt(p * (1.0 - p) / trials)};
}

McQuantity McStageReport::stop_high(int k) const {
    const double p = static_cast<double>(stop_high_count[static_cast<size_t>(k)]) / trials;
    return {p, std::sqrt(p * (1.0 - p) / trials)};
}

McQuantity McStageReport::cum_high(int k) const {
    std::uint64_t c = 0;
    for (int j = 1; j <= k; ++j) c += stop_high_count[static_cast<size_t>(j)];
    const double p = static_cast<double>(c) / trials;
    return {p, std::sqrt(p * (1.0 - p) / trials)};
}

McQuantity McStageReport::expected_k() const {
    const double nt = static_cast<double>(trials);
    const double mean = static_cast<double>(sum_k) / nt;
    const double var =
        (static_cast<double>(sum_k_sq) - nt * mean * mean) / std::max(1.0, nt - 1.0);
    return {mean, std::sqrt(std::max(0.0, var) / nt)};
}

McQuantity MonteCarloReport::final_high() const {
    return per_stage.back().cum_high(per_stage.back().horizon + 1);
}

namespace {

constexpr std::uint64_t kShardSize = 1ULL << 16;

struct ShardTally {
    // [stage][kind][k]
    std::vector<std::array<std::vector<std::uint64_t>, 2>> counts;
    std::vector<std::uint64_t> sum_k;
    std::vector<std::uint64_t> sum_k_sq;

    ShardTally() = default;
    ShardTally(int stages, int n) {
        counts.resize(static_cast<size_t>(stages));
        for (auto& st : counts) {
            st[0].assign(static_cast<size_t>(n) + 2, 0);
            st[1].assign(static_cast<size_t>(n) + 2, 0);
        }
        sum_k.assign(static_cast<size_t>(stages), 0);
        sum_k_sq.assign(static_cast<size_t>(stages), 0);
    }

    void record(int stage, int kind, int k) {
        counts[static_cast<size_t>(stage)][static_cast<size_t>(kind)][static_cast<size_t>(k)]++;
        sum_k[static_cast<size_t>(stage)] += static_cast<std::uint64_t>(k);
        sum_k_sq[static_cast<size_t>(stage)] += static_cast<std::uint64_t>(k) * k;
    }
};

// One simulated trajectory; replays the stage-switch semantics on a single
// sampled decision stream.
void run_trial(const MultiStageTest& test, int h, std::mt19937_64& rng, ShardTally& tally) {
    const int n = test.horizon();
    const int s_count = test.stage_count();

    int stage = 0;
    double w0 = 1.0, w1 = 1.0;
    for (int k = 1; k <= n; ++k) {
        const auto& step =
            test.stages[static_cast<size_t>(stage)].steps[static_cast<size_t>(k - 1)];
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const int d = (u < step(1, h)) ? 1 : 0;
        w0 *= step(d, 0);
        w1 *= step(d, 1);

        while (true) {
            const auto& th = test.stages[static_cast<size_t>(stage)].thresholds;
            int kind;
            if (w1 <= th.eta0 * w0) {
                kind = 0;
            } else if (w1 >= th.eta1 * w0) {
                kind = 1;
            } else {
                break;
            }
            tally.record(stage, kind, k);
            if (stage == s_count - 1) return;  // final decision reached
            ++stage;
        }
    }

    const double mid = test.stages[static_cast<size_t>(stage)].thresholds.midpoint();
    const int kind = (w1 >= mid * w0) ? 1 : 0;
    for (int s = stage; s < s_count; ++s) tally.record(s, kind, n + 1);
}

}  // namespace

MonteCarloReport monte_carlo_multistage(const MultiStageTest& test, int hypothesis,
                                        std::uint64_t trials, std::uint64_t seed, bool parallel) {
    test.validate();
    require(hypothesis == 0 || hypothesis == 1, "monte carlo: hypothesis must be 0 or 1");
    require(trials >= 1, "monte carlo: trials must be >= 1");
    const int n = test.horizon();
    const int s_count = test.stage_count();

    const std::uint64_t shards = (trials + kShardSize - 1) / kShardSize;
    std::vector<ShardTally> partial(static_cast<size_t>(shards));

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(shards); ++i) {
        const std::uint64_t lo = static_cast<std::uint64_t>(i) * kShardSize;
        const std::uint64_t count = std::min(kShardSize, trials - lo);
        std::mt19937_64 rng(
            splitmix64(seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(i) + 1)));
        ShardTally tally(s_count, n);
        for (std::uint64_t t = 0; t < count; ++t) run_trial(test, hypothesis, rng, tally);
        partial[static_cast<size_t>(i)] = std::move(tally);
    }

    MonteCarloReport out;
    out.hypothesis = hypothesis;
    out.trials = trials;
    out.seed = seed;
    out.generator = "mt19937_64/canonical53/shard" + std::to_string(kShardSize);
    out.per_stage.resize(static_cast<size_t>(s_count));
    for (int s = 0; s < s_count; ++s) {
        McStageReport& rep = out.per_stage[static_cast<size_t>(s)];
        rep.horizon = n;
        rep.trials = trials;
        rep.stop_low_count.assign(static_cast<size_t>(n) + 2, 0);
        rep.stop_high_count.assign(static_cast<size_t>(n) + 2, 0);
        for (const auto& shard : partial) {
            for (int k = 1; k <= n + 1; ++k) {
                rep.stop_low_count[static_cast<size_t>(k)] +=
                    shard.counts[static_cast<size_t>(s)][0][static_cast<size_t>(k)];
                rep.stop_high_count[static_cast<size_t>(k)] +=
                    shard.counts[static_cast<size_t>(s)][1][static_cast<size_t>(k)];
            }
            rep.sum_k += shard.sum_k[static_cast<size_t>(s)];
            rep.sum_k_sq += shard.sum_k_sq[static_cast<size_t>(s)];
        }
    }
    return out;
}

ConfusionMatrix brute_force_network(const FusionNetwork& net,
                                    const std::map<std::string, ConfusionMatrix>& sensor_models) {
    const auto order = fusion_order(net);  // rejects invalid networks
    const int m = net.m;

    std::vector<const Vertex*> sensors;
    for (const auto& v : net.vertices) {
        if (v.kind == VertexKind::Sensor) sensors.push_back(&v);
    }
    std::sort(sensors.begin(), sensors.end(),
              [](const Vertex* a, const Vertex* b) { return a->id < b->id; });
    require(sensors.size() <= 15,
            "brute_force_network: refusing " + std::to_string(sensors.size()) +
                " sensors (m^sensors joint outcomes; limit is 15)");

    std::map<std::string, const ConfusionMatrix*> models;
    for (const Vertex* s : sensors) {
        auto it = sensor_models.find(s->id);
        if (it != sensor_models.end()) {
            models[s->id] = &it->second;
        } else {
            require(s->model.has_value(), "brute_force_network: no model for sensor '" + s->id + "'");
            models[s->id] = &*s->model;
        }
        require(models[s->id]->size() == m, "brute_force_network: sensor model size mismatch");
    }

    TupleIndexer joint(static_cast<int>(sensors.size()), m);
    require(joint.count() <= (1ULL << 24),
            "brute_force_network: joint outcome space too large");

    // Tensors and marginals are built center by center in topological
    // order; every marginal comes from its own joint enumeration rather
    // than the per-center product formula under test.
    std::map<std::string, RuleTensor> tensors;
    std::map<std::string, ConfusionMatrix> marginals;

    std::vector<int> outcome(sensors.size());
    for (const auto& cid : order) {
        const Vertex& center = *net.find(cid);
        const auto parent_ids = net.parents_of(cid);
        std::vector<ConfusionMatrix> parent_matrices;
        for (const auto& pid : parent_ids) {
            const Vertex& pv = *net.find(pid);
            if (pv.kind == VertexKind::Sensor) {
                parent_matrices.push_back(*models.at(pid));
            } else {
                parent_matrices.push_back(marginals.at(pid));
            }
        }
        tensors.emplace(cid, build_rule(*center.rule, parent_matrices, m));

        std::vector<KahanSum> acc(static_cast<size_t>(m) * m);
        for (std::uint64_t oi = 0; oi < joint.count(); ++oi) {
            joint.decode(oi, outcome);

            // Forward pass: distribution of every tensor-built center
            // given this joint sensor outcome.
            std::map<std::string, std::vector<double>> dist;
            for (const auto& c2 : order) {
                std::vector<double> d(static_cast<size_t>(m), 0.0);
                const auto p2 = net.parents_of(c2);
                TupleIndexer combos(static_cast<int>(p2.size()), m);
                const RuleTensor& tensor = tensors.at(c2);
                for (std::uint64_t ci = 0; ci < combos.count(); ++ci) {
                    double w = 1.0;
                    for (size_t pn = 0; pn < p2.size(); ++pn) {
                        const int val = combos.digit(ci, static_cast<int>(pn));
                        const Vertex& pv = *net.find(p2[pn]);
                        if (pv.kind == VertexKind::Sensor) {
                            size_t si = 0;
                            while (sensors[si]->id != pv.id) ++si;
                            w *= (outcome[si] == val) ? 1.0 : 0.0;
                        } else {
                            w *= dist.at(pv.id)[static_cast<size_t>(val)];
                        }
                        if (w == 0.0) break;
                    }
                    if (w == 0.0) continue;
                    for (int f = 0; f < m; ++f) d[static_cast<size_t>(f)] += w * tensor.row(ci)[f];
                }
                dist.emplace(c2, std::move(d));
                if (c2 == cid) break;
            }

            for (int h = 0; h < m; ++h) {
                double mass = 1.0;
                for (size_t si = 0; si < sensors.size(); ++si) {
                    mass *= (*models.at(sensors[si]->id))(outcome[si], h);
                }
                if (mass == 0.0) continue;
                for (int f = 0; f < m; ++f) {
                    acc[static_cast<size_t>(f) * m + h].add(mass * dist.at(cid)[static_cast<size_t>(f)]);
                }
            }
        }

        std::vector<double> entries(static_cast<size_t>(m) * m);
        for (size_t i = 0; i < entries.size(); ++i) {
            entries[i] = std::min(1.0, std::max(0.0, acc[i].value()));
        }
        marginals.emplace(cid, ConfusionMatrix(m, std::move(entries)));
    }

    return marginals.at(order.back());
}

}  // namespace oracle
}  // namespace fuseq
