#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fuseq/confusion_matrix.hpp"

namespace fuseq {

enum class RuleKind { And, Or, Majority, NeymanPearson, Bayes };

std::string to_string(RuleKind kind);

/// Parameters of one of the five hard-decision fusion rules.
/// And/Or/NeymanPearson are defined for the binary decision space only;
/// Majority and Bayes work for any m.
struct RuleSpec {
    RuleKind kind = RuleKind::And;

    // NeymanPearson: false-alarm budget, in (0,1).
    double pf_target = 0.0;

    // Bayes: costs of a false alarm, a missed detection and (m > 2 only)
    // a mix-up between two threat decisions.
    double c_false = 0.0;
    double c_miss = 0.0;
    double c_cross = 0.0;
    // Prior P(H = h), length m, entries in [0,1], sum 1 within 1e-12.
    std::vector<double> priors;

    static RuleSpec and_rule() {
        RuleSpec s;
        s.kind = RuleKind::And;
        return s;
    }
    static RuleSpec or_rule() {
        RuleSpec s;
        s.kind = RuleKind::Or;
        return s;
    }
    static RuleSpec majority() {
        RuleSpec s;
        s.kind = RuleKind::Majority;
        return s;
    }
    static RuleSpec neyman_pearson(double pf_target);
    static RuleSpec bayes(double c_false, double c_miss, std::vector<double> priors,
                          double c_cross = 0.0);
};

/// Enumerates decision tuples (s_1,...,s_V), each s_n in [0,m).
/// Tuples are ordered lexicographically ascending with s_1 most
/// significant; this is the summation order everywhere combos are reduced,
/// which pins floating-point reproducibility.
class TupleIndexer {
public:
    TupleIndexer(int arity, int m);

    std::uint64_t count() const { return count_; }
    int arity() const { return arity_; }

    /// Digit n of tuple index `idx` (n = 0 is s_1, the most significant).
    int digit(std::uint64_t idx, int n) const;
    void decode(std::uint64_t idx, std::vector<int>& out) const;

private:
    int arity_;
    int m_;
    std::uint64_t count_;
};

/// Map from each of the m^V parent-decision tuples to a distribution over
/// the fused decision. Deterministic rules store one-hot rows; only the
/// majority rule can produce non-degenerate rows (tie splitting).
struct RuleTensor {
    int arity = 0;
    int m = 0;
    /// row(t) holds P(F = . | tuple t); rows indexed per TupleIndexer order.
    std::vector<double> table;
    /// Set when a Neyman-Pearson budget admits no tuple at all and the rule
    /// degenerates to the constant no-threat decision.
    bool degenerate = false;

    const double* row(std::uint64_t tuple_idx) const { return table.data() + tuple_idx * m; }
    double* row(std::uint64_t tuple_idx) { return table.data() + tuple_idx * m; }

    /// Each row must be a distribution (sum 1 within 1e-12).
    void validate() const;
};

/// Builds the And / Or / Majority tensor, which depends only on the arity
/// and decision-space size. And/Or require m = 2.
RuleTensor build_fixed_rule(const RuleSpec& spec, int arity, int m);

/// Deterministic Neyman-Pearson rule: per-tuple likelihood ratios sorted
/// descending (ties broken by ascending tuple), F=1 assigned to the longest
/// prefix whose cumulative H=0 mass stays within pf_target.
RuleTensor build_np_rule(const std::vector<ConfusionMatrix>& parents, double pf_target);

/// Bayes-optimal rule: per tuple, the decision minimizing expected cost
/// under the given priors; argmin ties resolve to the smallest decision.
RuleTensor build_bayes_rule(const std::vector<ConfusionMatrix>& parents, const RuleSpec& spec);

/// Builds the tensor for an arbitrary rule spec given the parent matrices.
RuleTensor build_rule(const RuleSpec& spec, const std::vector<ConfusionMatrix>& parents, int m);

/// Marginalizes the rule tensor against parent matrices assumed
/// conditionally independent given H:
///   P(F=f|H=h) = sum_tuples tensor[tuple][f] * prod_n parents[n](tuple_n, h)
ConfusionMatrix fuse(const RuleTensor& tensor, const std::vector<ConfusionMatrix>& parents);

}  // namespace fuseq
