#include "fuseq/multistage.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fuseq {

TargetOperatingPoint::TargetOperatingPoint(double pf, double pd) : pf_star(pf), pd_star(pd) {
    require(pf > 0.0 && pf < pd && pd < 1.0,
            "target operating point: need 0 < pf* < pd* < 1, got (" + std::to_string(pf) + ", " +
                std::to_string(pd) + ")");
}

Thresholds wald_thresholds(const TargetOperatingPoint& target) {
    return Thresholds((1.0 - target.pd_star) / (1.0 - target.pf_star),
                      target.pd_star / target.pf_star);
}

int MultiStageTest::horizon() const {
    return stages.empty() ? 0 : static_cast<int>(stages.front().steps.size());
}

void MultiStageTest::validate() const {
    require(!stages.empty(), "multi-stage test: at least one stage required");
    const int n = horizon();
    require(n >= 1, "multi-stage test: horizon must be >= 1");
    for (size_t s = 0; s < stages.size(); ++s) {
        require(static_cast<int>(stages[s].steps.size()) == n,
                "multi-stage test: stage " + std::to_string(s + 1) +
                    " has a different horizon");
        for (const auto& m : stages[s].steps) {
            require(m.size() == 2, "multi-stage test: step matrices must be 2x2");
        }
        if (s > 0) {
            require(stages[s].thresholds.eta0 <= stages[s - 1].thresholds.eta0 &&
                        stages[s].thresholds.eta1 >= stages[s - 1].thresholds.eta1,
                    "multi-stage test: stage " + std::to_string(s + 1) +
                        " thresholds must nest (eta0' <= eta0 and eta1' >= eta1)");
        }
    }
}

std::vector<double> StageReport::pmf(int h) const {
    std::vector<double> p(static_cast<size_t>(horizon) + 2, 0.0);
    for (int k = 1; k <= horizon + 1; ++k) {
        p[static_cast<size_t>(k)] = stop_low[static_cast<size_t>(h)][static_cast<size_t>(k)] +
                                    stop_high[static_cast<size_t>(h)][static_cast<size_t>(k)];
    }
    return p;
}

double StageReport::stop_mass(int h) const {
    KahanSum s;
    for (int k = 1; k <= horizon + 1; ++k) {
        s.add(stop_low[static_cast<size_t>(h)][static_cast<size_t>(k)]);
        s.add(stop_high[static_cast<size_t>(h)][static_cast<size_t>(k)]);
    }
    return s.value();
}

namespace {

StageReport blank_report(int n) {
    StageReport r;
    r.horizon = n;
    for (int h = 0; h < 2; ++h) {
        r.stop_low[static_cast<size_t>(h)].assign(static_cast<size_t>(n) + 2, 0.0);
        r.stop_high[static_cast<size_t>(h)].assign(static_cast<size_t>(n) + 2, 0.0);
    }
    r.pd_cum.assign(static_cast<size_t>(n) + 2, 0.0);
    r.pf_cum.assign(static_cast<size_t>(n) + 2, 0.0);
    r.alive_count.assign(static_cast<size_t>(n) + 2, 0);
    r.alive_mass[0].assign(static_cast<size_t>(n) + 2, 0.0);
    r.alive_mass[1].assign(static_cast<size_t>(n) + 2, 0.0);
    return r;
}

void add_atom_masses(StageReport& report, int k, const std::vector<PathAtom>& low,
                     const std::vector<PathAtom>& high) {
    KahanSum l0, l1, h0, h1;
    for (const auto& a : low) {
        l0.add(a.w0);
        l1.add(a.w1);
    }
    for (const auto& a : high) {
        h0.add(a.w0);
        h1.add(a.w1);
    }
    report.stop_low[0][static_cast<size_t>(k)] += l0.value();
    report.stop_low[1][static_cast<size_t>(k)] += l1.value();
    report.stop_high[0][static_cast<size_t>(k)] += h0.value();
    report.stop_high[1][static_cast<size_t>(k)] += h1.value();
}

// 0 = inside, 1 = at/below eta0, 2 = at/above eta1.
int classify_atom(const PathAtom& a, const Thresholds& th) {
    if (a.w1 <= th.eta0 * a.w0) return 1;
    if (a.w1 >= th.eta1 * a.w0) return 2;
    return 0;
}

}  // namespace

MultiStageReport run_multistage(const MultiStageTest& test, const CoalesceMode& mode) {
    test.validate();
    const int n = test.horizon();
    const int s_count = test.stage_count();

    MultiStageReport out;
    out.per_stage.reserve(static_cast<size_t>(s_count));
    for (int s = 0; s < s_count; ++s) out.per_stage.push_back(blank_report(n));

    std::vector<Frontier> frontiers(static_cast<size_t>(s_count));
    for (int s = 0; s < s_count; ++s) frontiers[static_cast<size_t>(s)].stage_index = s;
    frontiers[0].atoms.push_back({1.0, 1.0, 1});

    for (int k = 1; k <= n; ++k) {
        // Every live atom consumes one decision from its own stage's
        // network; all frontiers step before any crossover is applied.
        std::vector<AdvanceResult> stepped(static_cast<size_t>(s_count));
        for (int s = 0; s < s_count; ++s) {
            auto& f = frontiers[static_cast<size_t>(s)];
            if (f.atoms.empty()) continue;
            stepped[static_cast<size_t>(s)] =
                advance(f, test.stages[static_cast<size_t>(s)].steps[static_cast<size_t>(k - 1)],
                        test.stages[static_cast<size_t>(s)].thresholds);
            f.atoms = std::move(stepped[static_cast<size_t>(s)].alive);
        }

        // Crossover cascade: stops recorded per stage, stopped atoms hand
        // over to the next stage at the same k and re-classify there.
        std::vector<PathAtom> entering;
        for (int s = 0; s < s_count; ++s) {
            auto& res = stepped[static_cast<size_t>(s)];
            std::vector<PathAtom> low = std::move(res.escaped_low);
            std::vector<PathAtom> high = std::move(res.escaped_high);
            auto& frontier = frontiers[static_cast<size_t>(s)];
            for (const auto& atom : entering) {
                switch (classify_atom(atom, test.stages[static_cast<size_t>(s)].thresholds)) {
                    case 0: frontier.atoms.push_back(atom); break;
                    case 1: low.push_back(atom); break;
                    default: high.push_back(atom); break;
                }
            }
            add_atom_masses(out.per_stage[static_cast<size_t>(s)], k, low, high);
            if (s + 1 < s_count) {
                entering = std::move(low);
                entering.insert(entering.end(), high.begin(), high.end());
            }
        }

        for (int s = 0; s < s_count; ++s) {
            auto& f = frontiers[static_cast<size_t>(s)];
            f.atoms = coalesce(std::move(f.atoms), mode);
            auto& rep = out.per_stage[static_cast<size_t>(s)];
            rep.alive_count[static_cast<size_t>(k)] = f.path_count();
            rep.alive_mass[0][static_cast<size_t>(k)] = f.mass(0);
            rep.alive_mass[1][static_cast<size_t>(k)] = f.mass(1);
        }
    }

    out.alive_paths_at_horizon = 0;
    for (int s = 0; s < s_count; ++s) {
        out.alive_paths_at_horizon += frontiers[static_cast<size_t>(s)].path_count();
    }

    // Forced decisions at N+1: leftover atoms compare against their own
    // stage's geometric midpoint (ties count as detection); decided masses
    // pass through into every later stage's N+1 bucket.
    {
        std::vector<PathAtom> carry_low, carry_high;
        for (int s = 0; s < s_count; ++s) {
            const double mid = test.stages[static_cast<size_t>(s)].thresholds.midpoint();
            std::vector<PathAtom> low = std::move(carry_low);
            std::vector<PathAtom> high = std::move(carry_high);
            for (const auto& atom : frontiers[static_cast<size_t>(s)].atoms) {
                if (atom.w1 >= mid * atom.w0) {
                    high.push_back(atom);
                } else {
                    low.push_back(atom);
                }
            }
            add_atom_masses(out.per_stage[static_cast<size_t>(s)], n + 1, low, high);
            carry_low = std::move(low);
            carry_high = std::move(high);
        }
    }

    for (int s = 0; s < s_count; ++s) {
        auto& rep = out.per_stage[static_cast<size_t>(s)];
        KahanSum pd, pf;
        for (int k = 1; k <= n + 1; ++k) {
            pd.add(rep.stop_high[1][static_cast<size_t>(k)]);
            pf.add(rep.stop_high[0][static_cast<size_t>(k)]);
            rep.pd_cum[static_cast<size_t>(k)] = pd.value();
            rep.pf_cum[static_cast<size_t>(k)] = pf.value();
        }
        rep.expected_k[0] = expected_stopping_time(rep, 0);
        rep.expected_k[1] = expected_stopping_time(rep, 1);
    }

    out.pd_final = out.final_stage().pd_cum[static_cast<size_t>(n) + 1];
    out.pf_final = out.final_stage().pf_cum[static_cast<size_t>(n) + 1];
    out.growth_base = growth_base(out, n);
    return out;
}

double expected_stopping_time(const StageReport& report, int h) {
    KahanSum s;
    for (int k = 1; k <= report.horizon + 1; ++k) {
        s.add(k * (report.stop_low[static_cast<size_t>(h)][static_cast<size_t>(k)] +
                   report.stop_high[static_cast<size_t>(h)][static_cast<size_t>(k)]));
    }
    return s.value();
}

double growth_base(const MultiStageReport& report, int n) {
    require(n >= 1, "growth_base: horizon must be >= 1");
    if (report.alive_paths_at_horizon == 0) return 1.0;
    return std::pow(static_cast<double>(report.alive_paths_at_horizon), 1.0 / n);
}

int oscillation_sign_changes(const std::vector<double>& pmf_by_k, int k_lo, int k_hi) {
    require(k_lo >= 1 && k_lo <= k_hi, "oscillation metric: bad k range");
    k_hi = std::min(k_hi, static_cast<int>(pmf_by_k.size()) - 1);
    int changes = 0;
    int last_sign = 0;
    for (int k = k_lo; k <= k_hi; ++k) {
        const double d = pmf_by_k[static_cast<size_t>(k)] - pmf_by_k[static_cast<size_t>(k - 1)];
        const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
        if (sign != 0) {
            if (last_sign != 0 && sign != last_sign) ++changes;
            last_sign = sign;
        }
    }
    return changes;
}

WaldDiagnostic wald_diagnostic(const StageReport& report, const TargetOperatingPoint& target) {
    WaldDiagnostic d;
    d.bound_pd = 1.0 - (1.0 - target.pd_star) / (1.0 - target.pf_star);
    d.bound_pf = target.pf_star / target.pd_star;
    auto clamp_k = [&](double e) {
        return std::max(1, std::min(report.horizon + 1, static_cast<int>(std::ceil(e))));
    };
    d.k_h1 = clamp_k(expected_stopping_time(report, 1));
    d.k_h0 = clamp_k(expected_stopping_time(report, 0));
    d.pd_cum_at_k = report.pd_cum[static_cast<size_t>(d.k_h1)];
    d.pf_cum_at_k = report.pf_cum[static_cast<size_t>(d.k_h0)];
    d.pd_satisfied = d.pd_cum_at_k >= d.bound_pd;
    d.pf_satisfied = d.pf_cum_at_k <= d.bound_pf;
    return d;
}

}  // namespace fuseq
