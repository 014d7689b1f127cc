#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fuseq/fusion_network.hpp"
#include "fuseq/multistage.hpp"
#include "fuseq/oracle.hpp"

namespace fuseq {

/// Linear-drift sensor model: at time k the sensor's false alarm and
/// detection probabilities are 0.5 - a - b*k and 0.5 + a + b*k.
struct DriftSensorSpec {
    double a = 0.0;
    double b = 0.0;
};

/// Per-time matrices for one drift sensor over k = 1..n. Rejects any k
/// whose probabilities leave [0,1], naming the offending time step.
std::vector<ConfusionMatrix> drift_matrices(const DriftSensorSpec& spec, int n);

struct SensorSpec {
    std::string id;
    std::optional<DriftSensorSpec> drift;
    std::vector<ConfusionMatrix> series;  // explicit per-time matrices when no drift

    const ConfusionMatrix& at(int k) const;  // k in [1, horizon]
    /// Materializes drift specs into `series` for the given horizon.
    void resolve(int horizon);
};

struct StageSpec {
    FusionNetwork network;
    TargetOperatingPoint targets;
};

/// A fully validated scenario: sensors, per-stage networks/targets, and
/// output options.
struct Scenario {
    std::string name = "scenario";
    int horizon = 0;
    std::map<std::string, SensorSpec> sensors;
    std::vector<StageSpec> stages;

    CoalesceMode coalesce = CoalesceMode::exact();
    bool plots = false;
    std::string out_dir;  // may be empty; CLI --out overrides

    /// Fused per-time matrices for one stage, via static propagation.
    StageModel stage_model(int stage_index) const;
    MultiStageTest build_test() const;
    /// Copy with the horizon clamped to max_horizon (for verify runs).
    Scenario truncated(int max_horizon) const;
};

/// Parses and fully validates a scenario document (JSON data model).
/// Errors carry the field path, threshold-nesting violations and drift
/// range violations included.
Scenario load_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

/// Parses the CLI-facing coalesce mode syntax: "exact", "off" or "tol=<tau>".
CoalesceMode parse_coalesce_mode(const std::string& text);
std::string to_string(const CoalesceMode& mode);

struct ScenarioArtifacts {
    MultiStageReport report;
    std::vector<std::string> files_written;
    /// The summary document's key/value pairs, in emission order.
    std::vector<std::pair<std::string, std::string>> summary;
};

/// Runs the scenario end to end: per time step and stage the fused matrix
/// is propagated through the stage's network, the sequential engine runs
/// once, and per-stage stopping CSVs, a flat key=value summary and
/// (optionally) SVG charts are written to out_dir. All writes are atomic
/// (write-then-rename) and byte-identical across reruns of the same input.
ScenarioArtifacts run_scenario(const Scenario& scenario, const std::string& out_dir);

struct VerifyCheck {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    bool passed = false;
};

struct VerifyResult {
    int horizon_used = 0;
    std::vector<VerifyCheck> checks;
    bool passed() const;
    std::string to_string() const;
};

/// Cross-validates the engine on a (possibly truncated) scenario:
/// brute-force path enumeration must agree within 1e-10 on every reported
/// probability, and when mc_trials > 0 the Monte Carlo estimates of the
/// final operating point and the expected stopping times must fall within
/// 3 standard errors.
VerifyResult verify_scenario(const Scenario& scenario, int max_horizon, std::uint64_t mc_trials,
                             std::uint64_t seed);

}  // namespace fuseq
