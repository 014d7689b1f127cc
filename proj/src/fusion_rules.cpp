#include "fuseq/fusion_rules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fuseq {

std::string to_string(RuleKind kind) {
    switch (kind) {
        case RuleKind::And: return "and";
        case RuleKind::Or: return "or";
        case RuleKind::Majority: return "majority";
        case RuleKind::NeymanPearson: return "neyman-pearson";
        case RuleKind::Bayes: return "bayes";
    }
    return "?";
}

RuleSpec RuleSpec::neyman_pearson(double pf_target) {
    RuleSpec s;
    s.kind = RuleKind::NeymanPearson;
    s.pf_target = pf_target;
    return s;
}

RuleSpec RuleSpec::bayes(double c_false, double c_miss, std::vector<double> priors,
                         double c_cross) {
    RuleSpec s;
    s.kind = RuleKind::Bayes;
    s.c_false = c_false;
    s.c_miss = c_miss;
    s.c_cross = c_cross;
    s.priors = std::move(priors);
    return s;
}

TupleIndexer::TupleIndexer(int arity, int m) : arity_(arity), m_(m) {
    require(arity >= 1, "tuple indexer: arity must be >= 1");
    require(m >= 2, "tuple indexer: m must be >= 2");
    count_ = 1;
    for (int i = 0; i < arity; ++i) {
        require(count_ <= (1ULL << 40) / static_cast<std::uint64_t>(m),
                "tuple indexer: m^V too large");
        count_ *= static_cast<std::uint64_t>(m);
    }
}

int TupleIndexer::digit(std::uint64_t idx, int n) const {
    std::uint64_t div = 1;
    for (int i = arity_ - 1 - n; i > 0; --i) div *= static_cast<std::uint64_t>(m_);
    return static_cast<int>((idx / div) % static_cast<std::uint64_t>(m_));
}

void TupleIndexer::decode(std::uint64_t idx, std::vector<int>& out) const {
    out.resize(static_cast<size_t>(arity_));
    for (int n = arity_ - 1; n >= 0; --n) {
        out[static_cast<size_t>(n)] = static_cast<int>(idx % static_cast<std::uint64_t>(m_));
        idx /= static_cast<std::uint64_t>(m_);
    }
}

void RuleTensor::validate() const {
    require(arity >= 1 && m >= 2, "rule tensor: bad shape");
    TupleIndexer ix(arity, m);
    require(table.size() == ix.count() * static_cast<std::uint64_t>(m),
            "rule tensor: table size mismatch");
    for (std::uint64_t t = 0; t < ix.count(); ++t) {
        double s = 0.0;
        for (int f = 0; f < m; ++f) {
            double v = row(t)[f];
            require(v >= 0.0 && v <= 1.0, "rule tensor: entry outside [0,1]");
            s += v;
        }
        require(std::abs(s - 1.0) <= 1e-12, "rule tensor: row does not sum to 1");
    }
}

namespace {

RuleTensor blank_tensor(int arity, int m) {
    TupleIndexer ix(arity, m);
    RuleTensor t;
    t.arity = arity;
    t.m = m;
    t.table.assign(ix.count() * static_cast<std::uint64_t>(m), 0.0);
    return t;
}

void check_parents(const std::vector<ConfusionMatrix>& parents, int m) {
    require(!parents.empty(), "rule: at least one parent required");
    for (const auto& p : parents) {
        require(p.size() == m, "rule: parent decision-space size mismatch");
    }
}

}  // namespace

RuleTensor build_fixed_rule(const RuleSpec& spec, int arity, int m) {
    require(arity >= 1, "fixed rule: arity must be >= 1");
    switch (spec.kind) {
        case RuleKind::And: {
            require(m == 2, "'and' rule is defined for m = 2 only");
            RuleTensor t = blank_tensor(arity, m);
            TupleIndexer ix(arity, m);
            const std::uint64_t all_ones = ix.count() - 1;
            for (std::uint64_t c = 0; c < ix.count(); ++c) {
                t.row(c)[c == all_ones ? 1 : 0] = 1.0;
            }
            return t;
        }
        case RuleKind::Or: {
            require(m == 2, "'or' rule is defined for m = 2 only");
            RuleTensor t = blank_tensor(arity, m);
            TupleIndexer ix(arity, m);
            for (std::uint64_t c = 0; c < ix.count(); ++c) {
                t.row(c)[c == 0 ? 0 : 1] = 1.0;
            }
            return t;
        }
        case RuleKind::Majority: {
            RuleTensor t = blank_tensor(arity, m);
            TupleIndexer ix(arity, m);
            std::vector<int> counts(static_cast<size_t>(m));
            for (std::uint64_t c = 0; c < ix.count(); ++c) {
                std::fill(counts.begin(), counts.end(), 0);
                for (int n = 0; n < arity; ++n) counts[static_cast<size_t>(ix.digit(c, n))]++;
                const int best = *std::max_element(counts.begin(), counts.end());
                const int ties = static_cast<int>(std::count(counts.begin(), counts.end(), best));
                for (int f = 0; f < m; ++f) {
                    if (counts[static_cast<size_t>(f)] == best) t.row(c)[f] = 1.0 / ties;
                }
            }
            return t;
        }
        default:
            fail("build_fixed_rule: rule '" + to_string(spec.kind) +
                 "' needs parent matrices; use build_rule");
    }
}

RuleTensor build_np_rule(const std::vector<ConfusionMatrix>& parents, double pf_target) {
    check_parents(parents, 2);
    require(pf_target > 0.0 && pf_target < 1.0, "neyman-pearson: pf_target must be in (0,1)");
    const int arity = static_cast<int>(parents.size());
    TupleIndexer ix(arity, 2);

    struct TupleStat {
        std::uint64_t idx;
        double mass0;  // P(tuple | H=0)
        double mass1;  // P(tuple | H=1)
    };
    std::vector<TupleStat> stats;
    stats.reserve(ix.count());
    for (std::uint64_t c = 0; c < ix.count(); ++c) {
        double m0 = 1.0, m1 = 1.0;
        for (int n = 0; n < arity; ++n) {
            const int s = ix.digit(c, n);
            m0 *= parents[static_cast<size_t>(n)](s, 0);
            m1 *= parents[static_cast<size_t>(n)](s, 1);
        }
        stats.push_back({c, m0, m1});
    }

    // Likelihood-ratio descending; the cross-multiplied comparison keeps
    // mass0 = 0 (infinite ratio) tuples first without dividing. Ties break
    // by ascending tuple index.
    std::sort(stats.begin(), stats.end(), [](const TupleStat& a, const TupleStat& b) {
        const double lhs = a.mass1 * b.mass0;
        const double rhs = b.mass1 * a.mass0;
        if (lhs != rhs) return lhs > rhs;
        return a.idx < b.idx;
    });

    RuleTensor t = blank_tensor(arity, 2);
    double cum0 = 0.0;
    bool any = false;
    std::vector<bool> accept(ix.count(), false);
    for (const auto& s : stats) {
        if (cum0 + s.mass0 <= pf_target) {
            cum0 += s.mass0;
            accept[s.idx] = true;
            any = true;
        } else {
            break;
        }
    }
    for (std::uint64_t c = 0; c < ix.count(); ++c) {
        t.row(c)[accept[c] ? 1 : 0] = 1.0;
    }
    t.degenerate = !any;
    return t;
}

RuleTensor build_bayes_rule(const std::vector<ConfusionMatrix>& parents, const RuleSpec& spec) {
    require(spec.kind == RuleKind::Bayes, "build_bayes_rule: spec must be a bayes rule");
    const int m = parents.empty() ? 0 : parents.front().size();
    check_parents(parents, m);
    require(static_cast<int>(spec.priors.size()) == m, "bayes: priors length must equal m");
    double prior_sum = 0.0;
    for (double p : spec.priors) {
        require(p >= 0.0 && p <= 1.0, "bayes: prior outside [0,1]");
        prior_sum += p;
    }
    require(std::abs(prior_sum - 1.0) <= 1e-12, "bayes: priors must sum to 1");
    require(spec.c_false >= 0.0 && spec.c_miss >= 0.0 && spec.c_cross >= 0.0,
            "bayes: costs must be non-negative");

    // Cost of deciding j when H = k-1 (decisions and hypotheses both
    // range over 1..m here): diagonal 0, first column c_false, first row
    // c_miss, everything else c_cross.
    auto cost = [&](int j, int k) -> double {
        if (j == k) return 0.0;
        if (k == 1) return spec.c_false;
        if (j == 1) return spec.c_miss;
        return spec.c_cross;
    };

    const int arity = static_cast<int>(parents.size());
    TupleIndexer ix(arity, m);
    RuleTensor t = blank_tensor(arity, m);
    std::vector<double> mass(static_cast<size_t>(m));
    for (std::uint64_t c = 0; c < ix.count(); ++c) {
        for (int h = 0; h < m; ++h) {
            double w = 1.0;
            for (int n = 0; n < arity; ++n) w *= parents[static_cast<size_t>(n)](ix.digit(c, n), h);
            mass[static_cast<size_t>(h)] = w;
        }
        int best_j = 1;
        double best_risk = 0.0;
        for (int j = 1; j <= m; ++j) {
            double risk = 0.0;
            for (int k = 1; k <= m; ++k) {
                risk += cost(j, k) * spec.priors[static_cast<size_t>(k - 1)] *
                        mass[static_cast<size_t>(k - 1)];
            }
            if (j == 1 || risk < best_risk) {
                best_j = j;
                best_risk = risk;
            }
        }
        t.row(c)[best_j - 1] = 1.0;
    }
    return t;
}

RuleTensor build_rule(const RuleSpec& spec, const std::vector<ConfusionMatrix>& parents, int m) {
    switch (spec.kind) {
        case RuleKind::And:
        case RuleKind::Or:
        case RuleKind::Majority:
            return build_fixed_rule(spec, static_cast<int>(parents.size()), m);
        case RuleKind::NeymanPearson:
            return build_np_rule(parents, spec.pf_target);
        case RuleKind::Bayes:
            return build_bayes_rule(parents, spec);
    }
    fail("build_rule: unknown rule kind");
}

ConfusionMatrix fuse(const RuleTensor& tensor, const std::vector<ConfusionMatrix>& parents) {
    require(tensor.arity == static_cast<int>(parents.size()),
            "fuse: tensor arity does not match parent count");
    const int m = tensor.m;
    check_parents(parents, m);

    TupleIndexer ix(tensor.arity, m);
    std::vector<double> out(static_cast<size_t>(m) * m, 0.0);
    for (std::uint64_t c = 0; c < ix.count(); ++c) {
        const double* trow = tensor.row(c);
        for (int h = 0; h < m; ++h) {
            double w = 1.0;
            for (int n = 0; n < tensor.arity; ++n) {
                w *= parents[static_cast<size_t>(n)](ix.digit(c, n), h);
            }
            for (int f = 0; f < m; ++f) {
                out[static_cast<size_t>(f) * m + h] += trow[f] * w;
            }
        }
    }
    // Clamp sub-ulp drift so the result satisfies the ConfusionMatrix
    // column checks it feeds into.
    for (double& v : out) v = std::min(1.0, std::max(0.0, v));
    return ConfusionMatrix(m, std::move(out));
}

}  // namespace fuseq
