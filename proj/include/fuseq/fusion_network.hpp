#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fuseq/confusion_matrix.hpp"
#include "fuseq/fusion_rules.hpp"

namespace fuseq {

enum class VertexKind { Object, Sensor, FusionCenter };

std::string to_string(VertexKind kind);

struct Vertex {
    std::string id;
    VertexKind kind = VertexKind::Sensor;
    /// Sensor default model; propagate() accepts per-call overrides so the
    /// same topology can be swept over time-varying statistics.
    std::optional<ConfusionMatrix> model;
    /// Fusion rule; FusionCenter vertices only.
    std::optional<RuleSpec> rule;

    static Vertex object(std::string id);
    static Vertex sensor(std::string id, std::optional<ConfusionMatrix> model = std::nullopt);
    static Vertex center(std::string id, RuleSpec rule);
};

/// Directed acyclic graph of one object, sensors and fusion centers.
/// Edges run parent -> child. Cue edges (FusionCenter -> Sensor) are legal
/// and retained in the topology but carry no statistical meaning: sensor
/// statistics are conditioned on H only.
struct FusionNetwork {
    int m = 2;
    std::vector<Vertex> vertices;
    std::vector<std::pair<std::string, std::string>> edges;

    const Vertex* find(const std::string& id) const;
    std::vector<std::string> parents_of(const std::string& id) const;
    std::vector<std::string> children_of(const std::string& id) const;
};

/// Which structural rule a violation refers to.
enum class NetRule {
    Structure,          // dangling edge endpoint, duplicate id, duplicate edge
    SingleObject,       // exactly one Object vertex
    Acyclic,            // no directed cycles
    SensorParents,      // sensor parents: the Object plus at most one fusion center
    RootSensor,         // at least one sensor with only the Object as parent
    ObjectIntoCenter,   // no fusion center may have the Object as a parent
    UniqueFinalCenter,  // exactly one fusion center feeds no other center
    TreeShape,          // sensors and non-final centers feed exactly one center
};

std::string to_string(NetRule rule);

struct Violation {
    NetRule rule;
    std::string message;
    std::vector<std::string> vertices;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    /// True when ids/edges are at least self-consistent (no Structure
    /// violations); rule-level checks are only meaningful in that case.
    bool structurally_sound() const;
    std::string to_string() const;
};

/// Checks every network rule and reports all failures, not just the first.
/// Structural inconsistencies (dangling edge references, duplicate ids)
/// short-circuit the rule-level checks.
ValidationReport validate_network(const FusionNetwork& net);

/// Fusion centers in parent-to-child order: every center appears after all
/// centers that are its ancestors, ties broken by ascending vertex id.
/// Rejects invalid networks.
std::vector<std::string> fusion_order(const FusionNetwork& net);

/// Composes sensor models into the system-level decision matrix P(D=.|H)
/// by marginalizing each fusion center in fusion_order. sensor_models
/// overrides vertex-inline models; every sensor must have one or the other.
ConfusionMatrix propagate(const FusionNetwork& net,
                          const std::map<std::string, ConfusionMatrix>& sensor_models = {});

}  // namespace fuseq
