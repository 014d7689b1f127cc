#include "fuseq/fusion_network.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace fuseq {

std::string to_string(VertexKind kind) {
    switch (kind) {
        case VertexKind::Object: return "object";
        case VertexKind::Sensor: return "sensor";
        case VertexKind::FusionCenter: return "fusion-center";
    }
    return "?";
}

std::string to_string(NetRule rule) {
    switch (rule) {
        case NetRule::Structure: return "structure";
        case NetRule::SingleObject: return "single-object";
        case NetRule::Acyclic: return "acyclic";
        case NetRule::SensorParents: return "sensor-parents";
        case NetRule::RootSensor: return "root-sensor";
        case NetRule::ObjectIntoCenter: return "object-into-center";
        case NetRule::UniqueFinalCenter: return "unique-final-center";
        case NetRule::TreeShape: return "tree-shape";
    }
    return "?";
}

Vertex Vertex::object(std::string id) { return {std::move(id), VertexKind::Object, {}, {}}; }

Vertex Vertex::sensor(std::string id, std::optional<ConfusionMatrix> model) {
    return {std::move(id), VertexKind::Sensor, std::move(model), {}};
}

Vertex Vertex::center(std::string id, RuleSpec rule) {
    return {std::move(id), VertexKind::FusionCenter, {}, std::move(rule)};
}

const Vertex* FusionNetwork::find(const std::string& id) const {
    for (const auto& v : vertices) {
        if (v.id == id) return &v;
    }
    return nullptr;
}

std::vector<std::string> FusionNetwork::parents_of(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& [p, c] : edges) {
        if (c == id) out.push_back(p);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> FusionNetwork::children_of(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& [p, c] : edges) {
        if (p == id) out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool ValidationReport::structurally_sound() const {
    return std::none_of(violations.begin(), violations.end(),
                        [](const Violation& v) { return v.rule == NetRule::Structure; });
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& v : violations) {
        os << "[" << fuseq::to_string(v.rule) << "] " << v.message;
        if (!v.vertices.empty()) {
            os << " (";
            for (size_t i = 0; i < v.vertices.size(); ++i) {
                if (i) os << ", ";
                os << v.vertices[i];
            }
            os << ")";
        }
        os << "\n";
    }
    return os.str();
}

namespace {

bool has_cycle(const FusionNetwork& net, std::vector<std::string>& cycle_ids) {
    // Kahn peel; whatever cannot be peeled sits on a cycle.
    std::map<std::string, int> indegree;
    for (const auto& v : net.vertices) indegree[v.id] = 0;
    for (const auto& [p, c] : net.edges) indegree[c]++;

    std::set<std::string> ready;
    for (const auto& [id, deg] : indegree) {
        if (deg == 0) ready.insert(id);
    }
    size_t peeled = 0;
    while (!ready.empty()) {
        const std::string id = *ready.begin();
        ready.erase(ready.begin());
        ++peeled;
        for (const auto& [p, c] : net.edges) {
            if (p == id && --indegree[c] == 0) ready.insert(c);
        }
    }
    if (peeled == net.vertices.size()) return false;
    for (const auto& [id, deg] : indegree) {
        if (deg > 0) cycle_ids.push_back(id);
    }
    return true;
}

}  // namespace

ValidationReport validate_network(const FusionNetwork& net) {
    ValidationReport report;
    auto add = [&](NetRule rule, std::string msg, std::vector<std::string> ids = {}) {
        report.violations.push_back({rule, std::move(msg), std::move(ids)});
    };

    // Structural consistency: unique ids, edge endpoints that exist.
    std::set<std::string> ids;
    for (const auto& v : net.vertices) {
        if (!ids.insert(v.id).second) {
            add(NetRule::Structure, "duplicate vertex id", {v.id});
        }
    }
    std::set<std::pair<std::string, std::string>> seen_edges;
    for (const auto& [p, c] : net.edges) {
        if (!ids.count(p)) add(NetRule::Structure, "edge references unknown parent", {p, c});
        if (!ids.count(c)) add(NetRule::Structure, "edge references unknown child", {p, c});
        if (p == c) add(NetRule::Structure, "self-edge", {p});
        if (!seen_edges.insert({p, c}).second) add(NetRule::Structure, "duplicate edge", {p, c});
    }
    if (!report.structurally_sound()) return report;

    std::vector<std::string> objects;
    for (const auto& v : net.vertices) {
        if (v.kind == VertexKind::Object) objects.push_back(v.id);
    }
    if (objects.size() != 1) {
        add(NetRule::SingleObject,
            "network must contain exactly one object vertex, found " +
                std::to_string(objects.size()),
            objects);
    }

    std::vector<std::string> on_cycle;
    if (has_cycle(net, on_cycle)) {
        add(NetRule::Acyclic, "graph contains a directed cycle", on_cycle);
    }

    for (const auto& v : net.vertices) {
        if (v.kind != VertexKind::Sensor) continue;
        const auto parents = net.parents_of(v.id);
        int object_parents = 0, center_parents = 0, sensor_parents = 0;
        for (const auto& pid : parents) {
            switch (net.find(pid)->kind) {
                case VertexKind::Object: object_parents++; break;
                case VertexKind::FusionCenter: center_parents++; break;
                case VertexKind::Sensor: sensor_parents++; break;
            }
        }
        if (object_parents != 1 || sensor_parents > 0 || center_parents > 1) {
            add(NetRule::SensorParents,
                "sensor must have the object as a parent and at most one fusion center", {v.id});
        }
    }

    bool any_root_sensor = false;
    for (const auto& v : net.vertices) {
        if (v.kind != VertexKind::Sensor) continue;
        const auto parents = net.parents_of(v.id);
        if (parents.size() == 1 && net.find(parents.front()) &&
            net.find(parents.front())->kind == VertexKind::Object) {
            any_root_sensor = true;
        }
    }
    if (!any_root_sensor) {
        add(NetRule::RootSensor, "at least one sensor must have only the object as parent");
    }

    for (const auto& [p, c] : net.edges) {
        if (net.find(p)->kind == VertexKind::Object &&
            net.find(c)->kind == VertexKind::FusionCenter) {
            add(NetRule::ObjectIntoCenter, "fusion center has the object as a parent", {c});
        }
    }

    // Final decision vertex: the one center that feeds no other center.
    // Cue edges toward sensors do not count as decision children.
    auto center_children = [&](const std::string& id) {
        int n = 0;
        for (const auto& cid : net.children_of(id)) {
            if (net.find(cid)->kind == VertexKind::FusionCenter) ++n;
        }
        return n;
    };
    std::vector<std::string> finals;
    bool any_center = false;
    for (const auto& v : net.vertices) {
        if (v.kind != VertexKind::FusionCenter) continue;
        any_center = true;
        if (center_children(v.id) == 0) finals.push_back(v.id);
    }
    if (!any_center || finals.size() != 1) {
        add(NetRule::UniqueFinalCenter,
            "exactly one fusion center must feed no other center, found " +
                std::to_string(finals.size()),
            finals);
    }

    // Tree restriction. Per-center marginalization is exact only when a
    // center's parents are conditionally independent given H; shared
    // ancestry would break that silently, so it is rejected here.
    for (const auto& v : net.vertices) {
        if (v.kind == VertexKind::Object) continue;
        const bool is_final =
            v.kind == VertexKind::FusionCenter && center_children(v.id) == 0 && finals.size() == 1;
        if (is_final) continue;
        if (center_children(v.id) != 1) {
            add(NetRule::TreeShape,
                to_string(v.kind) + " must feed exactly one fusion center", {v.id});
        }
    }

    return report;
}

std::vector<std::string> fusion_order(const FusionNetwork& net) {
    const auto report = validate_network(net);
    require(report.ok(), "fusion_order: invalid network\n" + report.to_string());

    // Ancestry over the full graph; a center waits for every center that
    // can reach it. Among ready centers the smallest id goes first.
    std::vector<std::string> centers;
    for (const auto& v : net.vertices) {
        if (v.kind == VertexKind::FusionCenter) centers.push_back(v.id);
    }
    std::sort(centers.begin(), centers.end());

    auto reaches = [&](const std::string& from, const std::string& to) {
        std::vector<std::string> stack{from};
        std::set<std::string> seen{from};
        while (!stack.empty()) {
            const std::string cur = stack.back();
            stack.pop_back();
            if (cur == to) return true;
            for (const auto& c : net.children_of(cur)) {
                if (seen.insert(c).second) stack.push_back(c);
            }
        }
        return false;
    };

    std::vector<std::string> order;
    std::set<std::string> done;
    while (order.size() < centers.size()) {
        for (const auto& c : centers) {
            if (done.count(c)) continue;
            bool ready = true;
            for (const auto& other : centers) {
                if (other != c && !done.count(other) && reaches(other, c)) {
                    ready = false;
                    break;
                }
            }
            if (ready) {
                order.push_back(c);
                done.insert(c);
                break;
            }
        }
    }
    return order;
}

ConfusionMatrix propagate(const FusionNetwork& net,
                          const std::map<std::string, ConfusionMatrix>& sensor_models) {
    const auto order = fusion_order(net);

    auto sensor_matrix = [&](const Vertex& v) -> const ConfusionMatrix& {
        auto it = sensor_models.find(v.id);
        if (it != sensor_models.end()) {
            require(it->second.size() == net.m, "propagate: model for sensor '" + v.id +
                                                    "' has wrong decision-space size");
            return it->second;
        }
        require(v.model.has_value(), "propagate: no model for sensor '" + v.id + "'");
        require(v.model->size() == net.m, "propagate: model for sensor '" + v.id +
                                              "' has wrong decision-space size");
        return *v.model;
    };

    std::map<std::string, ConfusionMatrix> computed;
    for (const auto& cid : order) {
        const Vertex& center = *net.find(cid);
        require(center.rule.has_value(), "propagate: fusion center '" + cid + "' has no rule");

        std::vector<ConfusionMatrix> parents;
        for (const auto& pid : net.parents_of(cid)) {
            const Vertex& pv = *net.find(pid);
            if (pv.kind == VertexKind::Sensor) {
                parents.push_back(sensor_matrix(pv));
            } else {
                parents.push_back(computed.at(pid));
            }
        }
        const RuleTensor tensor = build_rule(*center.rule, parents, net.m);
        computed.emplace(cid, fuse(tensor, parents));
    }
    return computed.at(order.back());
}

}  // namespace fuseq
