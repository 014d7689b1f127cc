#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fuseq/fusion_rules.hpp"

using namespace fuseq;

namespace {

// Independent per-tuple statistics for binary parents: mass under each
// hypothesis, enumerated directly (the reference for NP/Bayes checks).
struct TupleMass {
    int idx;
    double m0;
    double m1;
};

std::vector<TupleMass> enumerate_tuples(const std::vector<ConfusionMatrix>& parents) {
    const int v = static_cast<int>(parents.size());
    std::vector<TupleMass> out;
    for (int idx = 0; idx < (1 << v); ++idx) {
        double m0 = 1.0, m1 = 1.0;
        for (int n = 0; n < v; ++n) {
            const int bit = (idx >> (v - 1 - n)) & 1;  // digit order matches TupleIndexer
            m0 *= parents[n](bit, 0);
            m1 *= parents[n](bit, 1);
        }
        out.push_back({idx, m0, m1});
    }
    return out;
}

// (pf, pd) realized by a deterministic rule given as an acceptance mask.
std::pair<double, double> operating_point(const std::vector<TupleMass>& tuples,
                                          unsigned accept_mask) {
    double pf = 0.0, pd = 0.0;
    for (const auto& t : tuples) {
        if (accept_mask & (1u << t.idx)) {
            pf += t.m0;
            pd += t.m1;
        }
    }
    return {pf, pd};
}

// Realized Bayes risk of an arbitrary (possibly random) binary rule.
double realized_risk(const std::vector<TupleMass>& tuples, const RuleTensor& tensor,
                     double c_false, double c_miss, const std::vector<double>& priors) {
    double risk = 0.0;
    for (const auto& t : tuples) {
        const double p_f1 = tensor.row(static_cast<std::uint64_t>(t.idx))[1];
        // deciding 1 under H=0 costs c_false; deciding 0 under H=1 costs c_miss
        risk += priors[0] * t.m0 * p_f1 * c_false;
        risk += priors[1] * t.m1 * (1.0 - p_f1) * c_miss;
    }
    return risk;
}

RuleTensor mask_tensor(int arity, unsigned accept_mask) {
    RuleTensor t;
    t.arity = arity;
    t.m = 2;
    t.table.assign(static_cast<size_t>(1 << arity) * 2, 0.0);
    for (int idx = 0; idx < (1 << arity); ++idx) {
        t.row(static_cast<std::uint64_t>(idx))[(accept_mask & (1u << idx)) ? 1 : 0] = 1.0;
    }
    return t;
}

bool is_one_hot_at(const RuleTensor& t, int tuple_idx, int decision) {
    for (int f = 0; f < t.m; ++f) {
        const double want = (f == decision) ? 1.0 : 0.0;
        if (t.row(static_cast<std::uint64_t>(tuple_idx))[f] != want) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("and rule: one-hot detection only on the all-ones tuple") {
    const RuleTensor t = build_fixed_rule(RuleSpec::and_rule(), 2, 2);
    t.validate();
    CHECK(is_one_hot_at(t, 0b00, 0));
    CHECK(is_one_hot_at(t, 0b01, 0));
    CHECK(is_one_hot_at(t, 0b10, 0));
    CHECK(is_one_hot_at(t, 0b11, 1));
}

TEST_CASE("or rule: no-threat only on the all-zeros tuple") {
    const RuleTensor t = build_fixed_rule(RuleSpec::or_rule(), 3, 2);
    t.validate();
    CHECK(is_one_hot_at(t, 0, 0));
    for (int idx = 1; idx < 8; ++idx) CHECK(is_one_hot_at(t, idx, 1));
}

TEST_CASE("majority rule: ties split uniformly") {
    const RuleTensor t = build_fixed_rule(RuleSpec::majority(), 2, 2);
    t.validate();
    CHECK(t.row(0b01)[0] == 0.5);
    CHECK(t.row(0b01)[1] == 0.5);
    CHECK(t.row(0b10)[0] == 0.5);
    CHECK(t.row(0b10)[1] == 0.5);
    CHECK(is_one_hot_at(t, 0b00, 0));
    CHECK(is_one_hot_at(t, 0b11, 1));

    // three-way tie over m=3
    const RuleTensor t3 = build_fixed_rule(RuleSpec::majority(), 3, 3);
    t3.validate();
    const int tuple_012 = 0 * 9 + 1 * 3 + 2;
    for (int f = 0; f < 3; ++f) {
        CHECK(t3.row(static_cast<std::uint64_t>(tuple_012))[f] == doctest::Approx(1.0 / 3));
    }
}

TEST_CASE("and/or rules reject m != 2") {
    CHECK_THROWS_AS(build_fixed_rule(RuleSpec::and_rule(), 2, 3), Error);
    CHECK_THROWS_AS(build_fixed_rule(RuleSpec::or_rule(), 2, 3), Error);
    CHECK_NOTHROW(build_fixed_rule(RuleSpec::majority(), 2, 3));
}

TEST_CASE("neyman-pearson rule on the (0.1, 0.9) pair") {
    const std::vector<ConfusionMatrix> parents{ConfusionMatrix::binary(0.1, 0.9),
                                               ConfusionMatrix::binary(0.1, 0.9)};
    const auto tuples = enumerate_tuples(parents);

    SUBCASE("budget 0.1 admits the top ratio plus one tied tuple") {
        const RuleTensor t = build_np_rule(parents, 0.1);
        CHECK_FALSE(t.degenerate);
        const auto fused = fuse(t, parents);
        CHECK(fused.pf() == doctest::Approx(0.10).epsilon(1e-12));
        CHECK(fused.pd() == doctest::Approx(0.90).epsilon(1e-12));
        CHECK(is_one_hot_at(t, 0b11, 1));
        CHECK(is_one_hot_at(t, 0b00, 0));
    }
    SUBCASE("budget 0.05 admits only the all-ones tuple") {
        const RuleTensor t = build_np_rule(parents, 0.05);
        const auto fused = fuse(t, parents);
        CHECK(fused.pf() == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(fused.pd() == doctest::Approx(0.81).epsilon(1e-12));
        CHECK(is_one_hot_at(t, 0b11, 1));
        CHECK(is_one_hot_at(t, 0b01, 0));
        CHECK(is_one_hot_at(t, 0b10, 0));
    }
    SUBCASE("budget below the smallest mass degenerates to all-zero") {
        const RuleTensor t = build_np_rule(parents, 0.005);
        CHECK(t.degenerate);
        const auto fused = fuse(t, parents);
        CHECK(fused.pf() == 0.0);
        CHECK(fused.pd() == 0.0);
    }
    SUBCASE("reference check: accepted mass never exceeds the budget") {
        for (double budget : {0.02, 0.05, 0.1, 0.3, 0.5, 0.9}) {
            const RuleTensor t = build_np_rule(parents, budget);
            unsigned mask = 0;
            for (const auto& tm : tuples) {
                if (t.row(static_cast<std::uint64_t>(tm.idx))[1] == 1.0) mask |= 1u << tm.idx;
            }
            const auto [pf, pd] = operating_point(tuples, mask);
            CHECK(pf <= budget + 1e-15);
        }
    }
}

TEST_CASE("neyman-pearson: infinite likelihood ratios sort first") {
    const std::vector<ConfusionMatrix> parents{ConfusionMatrix::binary(0.0, 0.9),
                                               ConfusionMatrix::binary(0.4, 0.6)};
    const RuleTensor t = build_np_rule(parents, 0.01);
    // Tuples starting with 1 have zero mass under H=0 and positive mass
    // under H=1: they cost nothing and must be accepted.
    CHECK(is_one_hot_at(t, 0b10, 1));
    CHECK(is_one_hot_at(t, 0b11, 1));
    const auto fused = fuse(t, parents);
    CHECK(fused.pf() == 0.0);
    CHECK(fused.pd() == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("neyman-pearson attains the best feasible LR-prefix operating point") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    for (int trial = 0; trial < 300; ++trial) {
        const int v = 1 + static_cast<int>(rng() % 3);
        std::vector<ConfusionMatrix> parents;
        for (int i = 0; i < v; ++i) parents.push_back(ConfusionMatrix::binary(u(rng), u(rng)));
        const double budget = u(rng);

        const RuleTensor t = build_np_rule(parents, budget);
        const auto fused = fuse(t, parents);

        // Reference: sort tuples by descending ratio (same tie order) and
        // evaluate every prefix length.
        auto tuples = enumerate_tuples(parents);
        std::sort(tuples.begin(), tuples.end(), [](const TupleMass& a, const TupleMass& b) {
            const double lhs = a.m1 * b.m0, rhs = b.m1 * a.m0;
            if (lhs != rhs) return lhs > rhs;
            return a.idx < b.idx;
        });
        double best_pd = 0.0;
        double pf = 0.0, pd = 0.0;
        for (const auto& tm : tuples) {
            pf += tm.m0;
            pd += tm.m1;
            if (pf <= budget) best_pd = std::max(best_pd, pd);
        }
        CHECK(fused.pd() >= best_pd - 1e-12);
        CHECK(fused.pf() <= budget + 1e-15);
    }
}

TEST_CASE("bayes rule reproduces and/or under the matching cost ratios") {
    const std::vector<ConfusionMatrix> parents{ConfusionMatrix::binary(0.1, 0.9),
                                               ConfusionMatrix::binary(0.1, 0.9)};
    const auto tuples = enumerate_tuples(parents);

    SUBCASE("uniform costs tie the mixed tuples toward no-threat: the and rule") {
        const RuleTensor t = build_bayes_rule(parents, RuleSpec::bayes(1.0, 1.0, {0.5, 0.5}));
        // reference: compare both risks on every tuple
        for (const auto& tm : tuples) {
            const double risk0 = 0.5 * tm.m1;  // deciding 0 costs c_miss under H=1
            const double risk1 = 0.5 * tm.m0;  // deciding 1 costs c_false under H=0
            const int expect = (risk1 < risk0) ? 1 : 0;  // tie -> smallest decision
            CHECK(is_one_hot_at(t, tm.idx, expect));
        }
        const auto fused = fuse(t, parents);
        CHECK(fused.pf() == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(fused.pd() == doctest::Approx(0.81).epsilon(1e-12));
    }
    SUBCASE("miss cost 9 flips the mixed tuples: the or rule") {
        const RuleTensor t = build_bayes_rule(parents, RuleSpec::bayes(1.0, 9.0, {0.5, 0.5}));
        CHECK(is_one_hot_at(t, 0b00, 0));
        CHECK(is_one_hot_at(t, 0b01, 1));
        CHECK(is_one_hot_at(t, 0b10, 1));
        CHECK(is_one_hot_at(t, 0b11, 1));
        const auto fused = fuse(t, parents);
        CHECK(fused.pf() == doctest::Approx(0.19).epsilon(1e-12));
        CHECK(fused.pd() == doctest::Approx(0.99).epsilon(1e-12));
    }
    SUBCASE("degenerate prior forces the no-threat decision everywhere") {
        const RuleTensor t = build_bayes_rule(parents, RuleSpec::bayes(1.0, 1.0, {1.0, 0.0}));
        for (int idx = 0; idx < 4; ++idx) CHECK(is_one_hot_at(t, idx, 0));
    }
}

TEST_CASE("bayes rule minimizes realized risk over all deterministic rules") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    std::uniform_real_distribution<double> cost(0.05, 10.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::vector<ConfusionMatrix> parents{ConfusionMatrix::binary(u(rng), u(rng)),
                                                   ConfusionMatrix::binary(u(rng), u(rng))};
        const double prior1 = u(rng);
        const std::vector<double> priors{1.0 - prior1, prior1};
        const double cf = cost(rng), cm = cost(rng);

        const RuleTensor bayes = build_bayes_rule(parents, RuleSpec::bayes(cf, cm, priors));
        const auto tuples = enumerate_tuples(parents);
        const double bayes_risk = realized_risk(tuples, bayes, cf, cm, priors);
        for (unsigned mask = 0; mask < 16; ++mask) {
            const double risk = realized_risk(tuples, mask_tensor(2, mask), cf, cm, priors);
            CHECK(bayes_risk <= risk + 1e-12);
        }
    }
}

TEST_CASE("fuse: identity, product and tie-splitting examples") {
    const auto s = ConfusionMatrix::binary(0.1, 0.9);

    SUBCASE("pass-through tensor") {
        const RuleTensor t = build_fixed_rule(RuleSpec::majority(), 1, 2);
        const auto out = fuse(t, {s});
        CHECK(out.pf() == doctest::Approx(0.1).epsilon(1e-14));
        CHECK(out.pd() == doctest::Approx(0.9).epsilon(1e-14));
    }
    SUBCASE("and tensor is a plain product") {
        const RuleTensor t = build_fixed_rule(RuleSpec::and_rule(), 2, 2);
        const auto out = fuse(t, {s, s});
        CHECK(out.pf() == doctest::Approx(0.01).epsilon(1e-13));
        CHECK(out.pd() == doctest::Approx(0.81).epsilon(1e-13));
    }
    SUBCASE("majority of two identical sensors equals one sensor") {
        // reference: enumerate the four tuples with half-weight ties
        const auto tuples = enumerate_tuples({s, s});
        double pf = 0.0, pd = 0.0;
        for (const auto& tm : tuples) {
            const double w = (tm.idx == 0b11) ? 1.0 : (tm.idx == 0b00 ? 0.0 : 0.5);
            pf += w * tm.m0;
            pd += w * tm.m1;
        }
        CHECK(pf == doctest::Approx(0.10).epsilon(1e-12));
        CHECK(pd == doctest::Approx(0.90).epsilon(1e-12));

        const RuleTensor t = build_fixed_rule(RuleSpec::majority(), 2, 2);
        const auto out = fuse(t, {s, s});
        CHECK(out.pf() == doctest::Approx(pf).epsilon(1e-13));
        CHECK(out.pd() == doctest::Approx(pd).epsilon(1e-13));
    }
    SUBCASE("arity mismatch is rejected") {
        const RuleTensor t = build_fixed_rule(RuleSpec::and_rule(), 2, 2);
        CHECK_THROWS_AS(fuse(t, {s}), Error);
    }
}

TEST_CASE("fuse is linear in each parent column") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const RuleTensor t = build_fixed_rule(RuleSpec::majority(), 2, 2);
    for (int trial = 0; trial < 100; ++trial) {
        const auto fixed = ConfusionMatrix::binary(u(rng), u(rng));
        const auto p = ConfusionMatrix::binary(u(rng), u(rng));
        const auto q = ConfusionMatrix::binary(u(rng), u(rng));
        const double lambda = u(rng);
        // convex combination of p and q in both columns
        const auto mix = ConfusionMatrix::binary(lambda * p.pf() + (1 - lambda) * q.pf(),
                                                 lambda * p.pd() + (1 - lambda) * q.pd());

        const auto out_p = fuse(t, {fixed, p});
        const auto out_q = fuse(t, {fixed, q});
        const auto out_mix = fuse(t, {fixed, mix});
        for (int i = 0; i < 2; ++i) {
            for (int h = 0; h < 2; ++h) {
                const double expect = lambda * out_p(i, h) + (1 - lambda) * out_q(i, h);
                CHECK(std::abs(out_mix(i, h) - expect) <= 1e-12);
            }
        }
    }
}

TEST_CASE("and is least sensitive, or most sensitive") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> lo(0.05, 0.45), hi(0.55, 0.95);
    for (int trial = 0; trial < 200; ++trial) {
        const int v = 2 + static_cast<int>(rng() % 2);
        std::vector<ConfusionMatrix> parents;
        for (int i = 0; i < v; ++i) parents.push_back(ConfusionMatrix::binary(lo(rng), hi(rng)));

        std::vector<RuleTensor> rules;
        rules.push_back(build_fixed_rule(RuleSpec::and_rule(), v, 2));
        rules.push_back(build_fixed_rule(RuleSpec::or_rule(), v, 2));
        rules.push_back(build_fixed_rule(RuleSpec::majority(), v, 2));
        rules.push_back(build_bayes_rule(parents, RuleSpec::bayes(1.0, 1.0, {0.5, 0.5})));

        const auto fused_and = fuse(rules[0], parents);
        const auto fused_or = fuse(rules[1], parents);
        for (const auto& rule : rules) {
            const auto fused = fuse(rule, parents);
            CHECK(fused_and.pf() <= fused.pf() + 1e-15);
            CHECK(fused_or.pd() >= fused.pd() - 1e-15);
        }
    }
}
