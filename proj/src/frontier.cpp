#include "fuseq/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fuseq {

Thresholds::Thresholds(double eta0_, double eta1_) : eta0(eta0_), eta1(eta1_) {
    require(eta0 > 0.0 && eta0 < 1.0 && eta1 > 1.0,
            "thresholds: need 0 < eta0 < 1 < eta1, got (" + std::to_string(eta0) + ", " +
                std::to_string(eta1) + ")");
}

double Thresholds::midpoint() const { return std::sqrt(eta0 * eta1); }

double PathAtom::ratio() const {
    if (w0 == 0.0) return std::numeric_limits<double>::infinity();
    return w1 / w0;
}

double Frontier::mass(int h) const {
    KahanSum s;
    for (const auto& a : atoms) s.add(h == 0 ? a.w0 : a.w1);
    return s.value();
}

std::uint64_t Frontier::path_count() const {
    std::uint64_t n = 0;
    for (const auto& a : atoms) n += a.count;
    return n;
}

namespace {

// 0 = alive, 1 = low, 2 = high. Cross-multiplied closed comparisons.
inline int classify(double w0, double w1, const Thresholds& th) {
    if (w1 <= th.eta0 * w0) return 1;
    if (w1 >= th.eta1 * w0) return 2;
    return 0;
}

inline void emit_children(const PathAtom& atom, const ConfusionMatrix& step,
                          const Thresholds& th, std::vector<PathAtom>& alive,
                          std::vector<PathAtom>& low, std::vector<PathAtom>& high) {
    for (int d = 0; d < 2; ++d) {
        const PathAtom child{atom.w0 * step(d, 0), atom.w1 * step(d, 1), atom.count};
        if (child.w0 == 0.0 && child.w1 == 0.0) continue;
        switch (classify(child.w0, child.w1, th)) {
            case 1: low.push_back(child); break;
            case 2: high.push_back(child); break;
            default: alive.push_back(child); break;
        }
    }
}

}  // namespace

AdvanceResult advance_serial(const Frontier& frontier, const ConfusionMatrix& step,
                             const Thresholds& thresholds) {
    require(step.size() == 2, "advance: step matrix must be 2x2");
    AdvanceResult res;
    res.alive.reserve(frontier.atoms.size() * 2);
    for (const auto& atom : frontier.atoms) {
        emit_children(atom, step, thresholds, res.alive, res.escaped_low, res.escaped_high);
    }
    return res;
}

AdvanceResult advance_parallel(const Frontier& frontier, const ConfusionMatrix& step,
                               const Thresholds& thresholds) {
    require(step.size() == 2, "advance: step matrix must be 2x2");
    const size_t n = frontier.atoms.size();
#ifdef _OPENMP
    const int threads = std::max(1, std::min(omp_get_max_threads(),
                                             static_cast<int>((n + 1023) / 1024)));
#else
    const int threads = 1;
#endif
    if (threads == 1) return advance_serial(frontier, step, thresholds);

    std::vector<AdvanceResult> partial(static_cast<size_t>(threads));
    const size_t block = (n + threads - 1) / threads;
#pragma omp parallel num_threads(threads)
    {
#ifdef _OPENMP
        const int t = omp_get_thread_num();
#else
        const int t = 0;
#endif
        const size_t lo = static_cast<size_t>(t) * block;
        const size_t hi = std::min(n, lo + block);
        AdvanceResult& local = partial[static_cast<size_t>(t)];
        local.alive.reserve((hi - lo) * 2);
        for (size_t i = lo; i < hi; ++i) {
            emit_children(frontier.atoms[i], step, thresholds, local.alive, local.escaped_low,
                          local.escaped_high);
        }
    }

    // Concatenate in block order: identical layout to the serial pass.
    AdvanceResult res;
    size_t na = 0, nl = 0, nh = 0;
    for (const auto& p : partial) {
        na += p.alive.size();
        nl += p.escaped_low.size();
        nh += p.escaped_high.size();
    }
    res.alive.reserve(na);
    res.escaped_low.reserve(nl);
    res.escaped_high.reserve(nh);
    for (auto& p : partial) {
        res.alive.insert(res.alive.end(), p.alive.begin(), p.alive.end());
        res.escaped_low.insert(res.escaped_low.end(), p.escaped_low.begin(), p.escaped_low.end());
        res.escaped_high.insert(res.escaped_high.end(), p.escaped_high.begin(),
                                p.escaped_high.end());
    }
    return res;
}

AdvanceResult advance(const Frontier& frontier, const ConfusionMatrix& step,
                      const Thresholds& thresholds) {
    constexpr size_t kParallelCutover = 16384;
    if (frontier.atoms.size() >= kParallelCutover) {
        return advance_parallel(frontier, step, thresholds);
    }
    return advance_serial(frontier, step, thresholds);
}

std::vector<PathAtom> coalesce(std::vector<PathAtom> atoms, const CoalesceMode& mode) {
    if (mode.kind == CoalesceKind::Off || atoms.size() < 2) return atoms;

    if (mode.kind == CoalesceKind::Exact) {
        // Group on the ratio value; first occurrence keeps the slot, so
        // output order is a deterministic function of input order.
        std::vector<PathAtom> out;
        out.reserve(atoms.size());
        std::unordered_map<double, size_t> slot;
        slot.reserve(atoms.size() * 2);
        for (const auto& a : atoms) {
            const double r = a.ratio();
            auto [it, inserted] = slot.try_emplace(r, out.size());
            if (inserted) {
                out.push_back(a);
            } else {
                PathAtom& dst = out[it->second];
                dst.w0 += a.w0;
                dst.w1 += a.w1;
                dst.count += a.count;
            }
        }
        return out;
    }

    // Tolerance mode: sort by ratio, sweep, and merge while the relative
    // difference to the group's anchor ratio stays within tau.
    require(mode.tau >= 0.0, "coalesce: tolerance must be >= 0");
    std::stable_sort(atoms.begin(), atoms.end(), [](const PathAtom& a, const PathAtom& b) {
        return a.ratio() < b.ratio();
    });
    std::vector<PathAtom> out;
    out.reserve(atoms.size());
    double anchor = 0.0;
    for (const auto& a : atoms) {
        const double r = a.ratio();
        bool merge = false;
        if (!out.empty()) {
            if (std::isinf(anchor)) {
                merge = std::isinf(r);
            } else {
                merge = std::abs(r - anchor) <= mode.tau * std::max(std::abs(anchor), 1e-300);
            }
        }
        if (merge) {
            out.back().w0 += a.w0;
            out.back().w1 += a.w1;
            out.back().count += a.count;
        } else {
            out.push_back(a);
            anchor = r;
        }
    }
    return out;
}

}  // namespace fuseq
