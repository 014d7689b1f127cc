#pragma once

#include <cstdint>
#include <vector>

#include "fuseq/confusion_matrix.hpp"

namespace fuseq {

/// Sequential-test thresholds. The open interval (eta0, eta1) is the
/// continue region; crossings are closed comparisons (<= eta0, >= eta1).
struct Thresholds {
    double eta0 = 0.0;
    double eta1 = 0.0;

    Thresholds() = default;
    Thresholds(double eta0_, double eta1_);

    /// Forced-decision boundary at truncation: sqrt(eta0 * eta1).
    double midpoint() const;
};

/// A coalesced bundle of sample paths sharing one likelihood ratio.
/// w0/w1 are summed path likelihoods under H=0/H=1; count is the number of
/// raw decision sequences bundled.
struct PathAtom {
    double w0 = 0.0;
    double w1 = 0.0;
    std::uint64_t count = 0;

    /// Shared likelihood ratio w1/w0 (+inf when w0 == 0).
    double ratio() const;
};

/// The set of still-alive path likelihood bundles governed by one stage's
/// thresholds and step matrices.
struct Frontier {
    std::vector<PathAtom> atoms;
    int stage_index = 0;

    double mass(int h) const;
    std::uint64_t path_count() const;
};

struct AdvanceResult {
    std::vector<PathAtom> alive;
    std::vector<PathAtom> escaped_low;
    std::vector<PathAtom> escaped_high;
};

/// One time step: each atom (w0,w1,c) spawns children
/// (w0*step(d,0), w1*step(d,1), c) for d in {0,1}; children at or past a
/// threshold escape, the rest stay alive. Children are emitted in atom
/// order, decision 0 before decision 1; a child with w0 == w1 == 0 is a
/// zero-probability path and is dropped. w0 == 0 with w1 > 0 classifies
/// as an infinite ratio (escapes high); comparisons are cross-multiplied
/// so no division occurs.
AdvanceResult advance_serial(const Frontier& frontier, const ConfusionMatrix& step,
                             const Thresholds& thresholds);

/// OpenMP kernel over disjoint contiguous atom blocks; per-thread outputs
/// are concatenated in block order, so results are bit-identical to
/// advance_serial.
AdvanceResult advance_parallel(const Frontier& frontier, const ConfusionMatrix& step,
                               const Thresholds& thresholds);

/// Dispatches to the parallel kernel above a size cutover, otherwise runs
/// serially. Identical output either way.
AdvanceResult advance(const Frontier& frontier, const ConfusionMatrix& step,
                      const Thresholds& thresholds);

enum class CoalesceKind { Off, Exact, Tolerance };

struct CoalesceMode {
    CoalesceKind kind = CoalesceKind::Exact;
    double tau = 0.0;

    static CoalesceMode off() { return {CoalesceKind::Off, 0.0}; }
    static CoalesceMode exact() { return {CoalesceKind::Exact, 0.0}; }
    static CoalesceMode tolerance(double tau) { return {CoalesceKind::Tolerance, tau}; }
};

/// Merges atoms sharing a likelihood ratio by componentwise addition of
/// (w0, w1, count). Exact mode merges identical ratios only; tolerance
/// mode merges atoms whose relative ratio difference is within tau.
/// Merging preserves every downstream statistic because dynamics and
/// classification depend on the ratio alone and all reported masses are
/// linear in (w0, w1).
std::vector<PathAtom> coalesce(std::vector<PathAtom> atoms, const CoalesceMode& mode);

}  // namespace fuseq
