#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fuseq/confusion_matrix.hpp"
#include "fuseq/frontier.hpp"

namespace fuseq {

/// Target operating probabilities (P_F*, P_D*) used to derive thresholds.
struct TargetOperatingPoint {
    double pf_star = 0.0;
    double pd_star = 0.0;

    TargetOperatingPoint() = default;
    TargetOperatingPoint(double pf, double pd);
};

/// Wald approximations: eta0 = (1-pd*)/(1-pf*), eta1 = pd*/pf*.
Thresholds wald_thresholds(const TargetOperatingPoint& target);

/// One stage of the test: a fused 2x2 matrix per time step plus the
/// stage's thresholds.
struct StageModel {
    std::vector<ConfusionMatrix> steps;  // steps[k-1] governs time k
    Thresholds thresholds;
};

/// Truncated multi-stage sequential test. Stage thresholds must nest:
/// eta0 non-increasing and eta1 non-decreasing across stages.
struct MultiStageTest {
    std::vector<StageModel> stages;

    int horizon() const;
    int stage_count() const { return static_cast<int>(stages.size()); }
    void validate() const;
};

/// Exact stopping statistics of one stage. Arrays are indexed by stopping
/// time k in [1, N+1]; index 0 is unused. All entries are unconditional
/// joint path masses, so low+high sums to 1 per hypothesis.
struct StageReport {
    int horizon = 0;
    std::array<std::vector<double>, 2> stop_low;   // [h][k]
    std::array<std::vector<double>, 2> stop_high;  // [h][k]
    std::vector<double> pd_cum;                    // cumulative high-crossing, H=1
    std::vector<double> pf_cum;                    // cumulative high-crossing, H=0
    std::array<double, 2> expected_k{0.0, 0.0};
    std::vector<std::uint64_t> alive_count;        // raw paths alive after step k
    std::array<std::vector<double>, 2> alive_mass;  // [h][k], mass alive after step k

    /// P(K=k|H=h) over k in [1, N+1].
    std::vector<double> pmf(int h) const;
    /// Total stopped mass under h; 1 up to accumulation error.
    double stop_mass(int h) const;
};

struct MultiStageReport {
    std::vector<StageReport> per_stage;
    double pd_final = 0.0;
    double pf_final = 0.0;
    std::uint64_t alive_paths_at_horizon = 0;
    double growth_base = 1.0;

    const StageReport& final_stage() const { return per_stage.back(); }
};

/// Runs the iterative likelihood-frontier algorithm. Per time step every
/// stage frontier advances with its own step matrix; threshold escapes are
/// recorded in that stage's report and handed to the next stage at the same
/// time index, where they are immediately re-classified (an atom already
/// outside the wider band stops right there). At N+1 each stage's leftover
/// atoms take a forced decision against that stage's geometric midpoint
/// (ratio >= midpoint counts as detection) and the decided masses flow into
/// every later stage's N+1 bucket, so the final stage accounts for all mass.
MultiStageReport run_multistage(const MultiStageTest& test,
                                const CoalesceMode& mode = CoalesceMode::exact());

/// E(K|H=h) = sum over k in [1, N+1] of k * P(K=k|H=h).
double expected_stopping_time(const StageReport& report, int h);

/// R-hat = (raw paths alive in all frontiers at time N)^(1/N); 1 when no
/// path survives. Coalescing does not distort this: bundles carry counts.
double growth_base(const MultiStageReport& report, int n);

/// Sign changes of successive differences of a stopping pmf over k in
/// [k_lo, k_hi]; zero differences carry the previous sign forward.
int oscillation_sign_changes(const std::vector<double>& pmf_by_k, int k_lo, int k_hi);

/// The classical threshold-quality bounds evaluated at the mean stopping
/// time; reported, not asserted, because truncation can perturb them.
struct WaldDiagnostic {
    double bound_pd = 0.0;  // 1 - (1-pd*)/(1-pf*)
    double bound_pf = 0.0;  // pf*/pd*
    int k_h1 = 0;           // ceil(E(K|H=1)), clamped to [1, N+1]
    int k_h0 = 0;           // ceil(E(K|H=0))
    double pd_cum_at_k = 0.0;
    double pf_cum_at_k = 0.0;
    bool pd_satisfied = false;
    bool pf_satisfied = false;
};

WaldDiagnostic wald_diagnostic(const StageReport& report, const TargetOperatingPoint& target);

}  // namespace fuseq
