#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fuseq/fusion_network.hpp"
#include "fuseq/oracle.hpp"

using namespace fuseq;

namespace {

FusionNetwork minimal_net() {
    FusionNetwork net;
    net.vertices = {Vertex::object("H"), Vertex::sensor("S1"), Vertex::sensor("S2"),
                    Vertex::center("F1", RuleSpec::and_rule())};
    net.edges = {{"H", "S1"}, {"H", "S2"}, {"S1", "F1"}, {"S2", "F1"}};
    return net;
}

bool has_rule(const ValidationReport& r, NetRule rule) {
    for (const auto& v : r.violations) {
        if (v.rule == rule) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("confusion matrix invariants") {
    CHECK_NOTHROW(ConfusionMatrix::binary(0.1, 0.9));
    CHECK_NOTHROW(ConfusionMatrix::binary(0.0, 1.0));  // boundary entries are legal
    CHECK_THROWS_AS(ConfusionMatrix::binary(-0.1, 0.9), Error);
    CHECK_THROWS_AS(ConfusionMatrix::binary(1.1, 0.9), Error);
    // column must sum to 1
    CHECK_THROWS_AS(ConfusionMatrix(2, {0.5, 0.1, 0.4, 0.9}), Error);
    CHECK_THROWS_AS(ConfusionMatrix(1, {1.0}), Error);

    const auto m = ConfusionMatrix::binary(0.1, 0.9);
    CHECK(m.pf() == 0.1);
    CHECK(m.pd() == 0.9);
    CHECK(m(0, 0) == 0.9);
    CHECK(m(0, 1) == doctest::Approx(0.1));

    const ConfusionMatrix tri(3, {0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8});
    CHECK(tri.size() == 3);
    CHECK_THROWS_AS(tri.pf(), Error);
}

TEST_CASE("validate_network accepts the minimal legal network") {
    const auto report = validate_network(minimal_net());
    CHECK(report.ok());
}

TEST_CASE("validate_network flags two childless fusion centers") {
    FusionNetwork net = minimal_net();
    net.vertices.push_back(Vertex::center("F2", RuleSpec::or_rule()));
    net.vertices.push_back(Vertex::sensor("S3"));
    net.edges.push_back({"H", "S3"});
    net.edges.push_back({"S3", "F2"});
    const auto report = validate_network(net);
    CHECK_FALSE(report.ok());
    CHECK(has_rule(report, NetRule::UniqueFinalCenter));
}

TEST_CASE("validate_network flags an object-into-center edge") {
    FusionNetwork net = minimal_net();
    net.edges.push_back({"H", "F1"});
    const auto report = validate_network(net);
    CHECK_FALSE(report.ok());
    CHECK(has_rule(report, NetRule::ObjectIntoCenter));
}

TEST_CASE("validate_network flags a sensor with two fusion-center parents") {
    FusionNetwork net = minimal_net();
    net.vertices.push_back(Vertex::center("F0a", RuleSpec::majority()));
    net.vertices.push_back(Vertex::center("F0b", RuleSpec::majority()));
    net.vertices.push_back(Vertex::sensor("S3"));
    net.edges.push_back({"H", "S3"});
    net.edges.push_back({"S1", "F0a"});  // reroute: S1 feeds F0a instead of F1
    net.edges.push_back({"S3", "F0b"});
    net.edges.push_back({"F0a", "F1"});
    net.edges.push_back({"F0b", "F1"});
    net.edges.push_back({"F0a", "S2"});
    net.edges.push_back({"F0b", "S2"});  // second center parent on S2
    net.edges.erase(std::find(net.edges.begin(), net.edges.end(),
                              std::pair<std::string, std::string>{"S1", "F1"}));
    const auto report = validate_network(net);
    CHECK_FALSE(report.ok());
    CHECK(has_rule(report, NetRule::SensorParents));
}

TEST_CASE("validate_network reports a dangling edge as a structural error") {
    FusionNetwork net = minimal_net();
    net.edges.push_back({"S9", "F1"});
    const auto report = validate_network(net);
    CHECK_FALSE(report.ok());
    CHECK_FALSE(report.structurally_sound());
    CHECK(has_rule(report, NetRule::Structure));
}

TEST_CASE("validate_network enumerates every failed rule") {
    // Two childless centers and an object-into-center edge at once.
    FusionNetwork net = minimal_net();
    net.vertices.push_back(Vertex::center("F2", RuleSpec::or_rule()));
    net.vertices.push_back(Vertex::sensor("S3"));
    net.edges.push_back({"H", "S3"});
    net.edges.push_back({"S3", "F2"});
    net.edges.push_back({"H", "F1"});
    const auto report = validate_network(net);
    CHECK(has_rule(report, NetRule::UniqueFinalCenter));
    CHECK(has_rule(report, NetRule::ObjectIntoCenter));
    CHECK(report.violations.size() >= 2);
}

TEST_CASE("validate_network flags cycles and missing root sensors") {
    FusionNetwork net = minimal_net();
    // F1 cues S1 while S1 feeds F1: a directed cycle, and S1 gains a
    // center parent so no sensor has only the object as parent... S2 still
    // qualifies as a root sensor though.
    net.edges.push_back({"F1", "S1"});
    auto report = validate_network(net);
    CHECK(has_rule(report, NetRule::Acyclic));

    // Cue edges between independent branches are legal.
    FusionNetwork cue;
    cue.vertices = {Vertex::object("H"), Vertex::sensor("S1"), Vertex::sensor("S2"),
                    Vertex::center("F1", RuleSpec::majority()),
                    Vertex::center("F2", RuleSpec::and_rule())};
    cue.edges = {{"H", "S1"}, {"H", "S2"}, {"S1", "F1"}, {"F1", "S2"}, {"F1", "F2"}, {"S2", "F2"}};
    report = validate_network(cue);
    CHECK(report.ok());

    // No sensor with only the object as parent.
    FusionNetwork no_root = cue;
    no_root.edges.push_back({"F2", "S1"});  // now both sensors are cued
    report = validate_network(no_root);
    // F2 cueing S1 makes a cycle too (S1 -> F1 -> F2 -> S1); both flagged.
    CHECK(has_rule(report, NetRule::RootSensor));
    CHECK(has_rule(report, NetRule::Acyclic));
}

TEST_CASE("validate_network enforces the tree restriction") {
    FusionNetwork net = minimal_net();
    net.vertices.push_back(Vertex::center("F2", RuleSpec::or_rule()));
    net.edges.push_back({"S1", "F2"});  // S1 now feeds two centers
    net.edges.push_back({"F2", "F1"});
    const auto report = validate_network(net);
    CHECK_FALSE(report.ok());
    CHECK(has_rule(report, NetRule::TreeShape));
}

TEST_CASE("fusion_order is deterministic parent-to-child order") {
    SUBCASE("single center") {
        CHECK(fusion_order(minimal_net()) == std::vector<std::string>{"F1"});
    }
    SUBCASE("chained centers") {
        FusionNetwork net;
        net.vertices = {Vertex::object("H"), Vertex::sensor("S1"), Vertex::sensor("S2"),
                        Vertex::center("FB", RuleSpec::and_rule()),
                        Vertex::center("FA", RuleSpec::or_rule())};
        net.edges = {{"H", "S1"}, {"H", "S2"}, {"S1", "FB"}, {"FB", "FA"}, {"S2", "FA"}};
        CHECK(fusion_order(net) == std::vector<std::string>{"FB", "FA"});
    }
    SUBCASE("siblings break ties by id") {
        FusionNetwork net;
        net.vertices = {Vertex::object("H"),
                        Vertex::sensor("S1"),
                        Vertex::sensor("S2"),
                        Vertex::sensor("S3"),
                        Vertex::sensor("S4"),
                        Vertex::center("F2", RuleSpec::and_rule()),
                        Vertex::center("F1", RuleSpec::and_rule()),
                        Vertex::center("F3", RuleSpec::or_rule())};
        net.edges = {{"H", "S1"},  {"H", "S2"},  {"H", "S3"},  {"H", "S4"},
                     {"S1", "F2"}, {"S2", "F2"}, {"S3", "F1"}, {"S4", "F1"},
                     {"F1", "F3"}, {"F2", "F3"}};
        CHECK(fusion_order(net) == std::vector<std::string>{"F1", "F2", "F3"});
    }
    SUBCASE("invalid network is rejected") {
        FusionNetwork net = minimal_net();
        net.edges.push_back({"H", "F1"});
        CHECK_THROWS_AS(fusion_order(net), Error);
    }
}

TEST_CASE("propagate: single sensor through a pass-through center") {
    FusionNetwork net;
    net.vertices = {Vertex::object("H"), Vertex::sensor("S1"),
                    Vertex::center("F1", RuleSpec::majority())};
    net.edges = {{"H", "S1"}, {"S1", "F1"}};
    const auto sensor = ConfusionMatrix::binary(0.13, 0.87);
    const auto out = propagate(net, {{"S1", sensor}});
    CHECK(out.pf() == doctest::Approx(0.13).epsilon(1e-14));
    CHECK(out.pd() == doctest::Approx(0.87).epsilon(1e-14));
}

TEST_CASE("propagate: independent AND pair") {
    FusionNetwork net = minimal_net();
    const auto s = ConfusionMatrix::binary(0.1, 0.9);
    const auto out = propagate(net, {{"S1", s}, {"S2", s}});
    CHECK(out.pf() == doctest::Approx(0.01).epsilon(1e-13));
    CHECK(out.pd() == doctest::Approx(0.81).epsilon(1e-13));
}

TEST_CASE("propagate: layered and/or network cross-checked against joint enumeration") {
    FusionNetwork net;
    net.vertices = {Vertex::object("H"),
                    Vertex::sensor("S1"),
                    Vertex::sensor("S2"),
                    Vertex::sensor("S3"),
                    Vertex::center("F1", RuleSpec::and_rule()),
                    Vertex::center("F2", RuleSpec::or_rule())};
    net.edges = {{"H", "S1"},  {"H", "S2"},  {"H", "S3"},
                 {"S1", "F1"}, {"S2", "F1"}, {"F1", "F2"}, {"S3", "F2"}};
    const auto s = ConfusionMatrix::binary(0.1, 0.9);
    const std::map<std::string, ConfusionMatrix> models{{"S1", s}, {"S2", s}, {"S3", s}};

    const auto out = propagate(net, models);
    CHECK(out.pf() == doctest::Approx(0.109).epsilon(1e-12));
    CHECK(out.pd() == doctest::Approx(0.981).epsilon(1e-12));

    const auto brute = oracle::brute_force_network(net, models);
    CHECK(out.approx_equal(brute, 1e-12));
}

TEST_CASE("propagate rejects missing models and size mismatches") {
    FusionNetwork net = minimal_net();
    const auto s = ConfusionMatrix::binary(0.1, 0.9);
    CHECK_THROWS_AS(propagate(net, {{"S1", s}}), Error);

    const ConfusionMatrix tri(3, {0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8});
    CHECK_THROWS_AS(propagate(net, {{"S1", s}, {"S2", tri}}), Error);
}

TEST_CASE("propagate uses inline sensor models when no override is given") {
    FusionNetwork net;
    net.vertices = {Vertex::object("H"), Vertex::sensor("S1", ConfusionMatrix::binary(0.2, 0.7)),
                    Vertex::center("F1", RuleSpec::majority())};
    net.edges = {{"H", "S1"}, {"S1", "F1"}};
    const auto out = propagate(net);
    CHECK(out.pf() == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(out.pd() == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("propagate output is invariant under center relabeling") {
    // Two sibling centers feeding a symmetric final rule: swapping their
    // ids flips the processing order and the final center's parent order,
    // but the result must be bit-identical.
    auto build = [](const std::string& left, const std::string& right) {
        FusionNetwork net;
        net.vertices = {Vertex::object("H"),
                        Vertex::sensor("S1"),
                        Vertex::sensor("S2"),
                        Vertex::sensor("S3"),
                        Vertex::sensor("S4"),
                        Vertex::center(left, RuleSpec::majority()),
                        Vertex::center(right, RuleSpec::or_rule()),
                        Vertex::center("FZ", RuleSpec::and_rule())};
        net.edges = {{"H", "S1"},   {"H", "S2"},   {"H", "S3"},  {"H", "S4"},
                     {"S1", left},  {"S2", left},  {"S3", right}, {"S4", right},
                     {left, "FZ"},  {right, "FZ"}};
        return net;
    };
    const std::map<std::string, ConfusionMatrix> models{
        {"S1", ConfusionMatrix::binary(0.11, 0.83)},
        {"S2", ConfusionMatrix::binary(0.23, 0.77)},
        {"S3", ConfusionMatrix::binary(0.05, 0.95)},
        {"S4", ConfusionMatrix::binary(0.31, 0.69)}};

    const auto a = propagate(build("FA", "FB"), models);
    const auto b = propagate(build("FB", "FA"), models);
    for (int i = 0; i < 2; ++i) {
        for (int h = 0; h < 2; ++h) {
            CHECK(a(i, h) == b(i, h));  // bitwise
        }
    }
}

TEST_CASE("propagate output columns always sum to one") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        FusionNetwork net = minimal_net();
        net.vertices[3].rule = (trial % 2) ? RuleSpec::majority() : RuleSpec::or_rule();
        std::map<std::string, ConfusionMatrix> models;
        for (const char* id : {"S1", "S2"}) {
            models.emplace(id, ConfusionMatrix::binary(u(rng), u(rng)));
        }
        const auto out = propagate(net, models);
        for (int h = 0; h < 2; ++h) {
            CHECK(std::abs(out(0, h) + out(1, h) - 1.0) <= 1e-12);
        }
    }
}
