#include "fuseq/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fuseq/svg_chart.hpp"

namespace fuseq {

using nlohmann::json;

std::vector<ConfusionMatrix> drift_matrices(const DriftSensorSpec& spec, int n) {
    require(n >= 1, "drift sensor: horizon must be >= 1");
    std::vector<ConfusionMatrix> out;
    out.reserve(static_cast<size_t>(n));
    for (int k = 1; k <= n; ++k) {
        const double pf = 0.5 - spec.a - spec.b * k;
        const double pd = 0.5 + spec.a + spec.b * k;
        require(pf >= 0.0 && pf <= 1.0 && pd >= 0.0 && pd <= 1.0,
                "drift sensor: probabilities leave [0,1] at k=" + std::to_string(k) +
                    " (pf=" + std::to_string(pf) + ", pd=" + std::to_string(pd) + ")");
        out.push_back(ConfusionMatrix::binary(pf, pd));
    }
    return out;
}

const ConfusionMatrix& SensorSpec::at(int k) const {
    require(k >= 1 && k <= static_cast<int>(series.size()),
            "sensor '" + id + "': no matrix for time " + std::to_string(k));
    return series[static_cast<size_t>(k - 1)];
}

void SensorSpec::resolve(int horizon) {
    if (drift.has_value()) {
        series = drift_matrices(*drift, horizon);
    } else {
        require(static_cast<int>(series.size()) == horizon,
                "sensor '" + id + "': series has " + std::to_string(series.size()) +
                    " entries, expected horizon " + std::to_string(horizon));
    }
}

StageModel Scenario::stage_model(int stage_index) const {
    const StageSpec& stage = stages.at(static_cast<size_t>(stage_index));
    StageModel model;
    model.thresholds = wald_thresholds(stage.targets);
    model.steps.reserve(static_cast<size_t>(horizon));
    for (int k = 1; k <= horizon; ++k) {
        std::map<std::string, ConfusionMatrix> models;
        for (const auto& v : stage.network.vertices) {
            if (v.kind != VertexKind::Sensor) continue;
            models.emplace(v.id, sensors.at(v.id).at(k));
        }
        model.steps.push_back(propagate(stage.network, models));
    }
    return model;
}

MultiStageTest Scenario::build_test() const {
    MultiStageTest test;
    test.stages.reserve(stages.size());
    for (size_t s = 0; s < stages.size(); ++s) {
        test.stages.push_back(stage_model(static_cast<int>(s)));
    }
    test.validate();
    return test;
}

Scenario Scenario::truncated(int max_horizon) const {
    Scenario copy = *this;
    if (copy.horizon > max_horizon) {
        copy.horizon = max_horizon;
        for (auto& [id, spec] : copy.sensors) {
            spec.series.resize(static_cast<size_t>(max_horizon), ConfusionMatrix::binary(0.5, 0.5));
        }
    }
    return copy;
}

namespace {

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
    fail("scenario: " + path + ": " + what);
}

const json& member(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) schema_fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) schema_fail(path + "." + key, "missing required field");
    return *it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) schema_fail(path, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) schema_fail(path, "expected an integer");
    return j.get<int>();
}

std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) schema_fail(path, "expected a string");
    return j.get<std::string>();
}

RuleSpec parse_rule(const json& j, const std::string& path, int m) {
    const std::string kind = text(member(j, "kind", path), path + ".kind");
    if (kind == "and") return RuleSpec::and_rule();
    if (kind == "or") return RuleSpec::or_rule();
    if (kind == "majority") return RuleSpec::majority();
    if (kind == "neyman-pearson") {
        const double pf = number(member(j, "pf_target", path), path + ".pf_target");
        if (pf <= 0.0 || pf >= 1.0) schema_fail(path + ".pf_target", "must be in (0,1)");
        return RuleSpec::neyman_pearson(pf);
    }
    if (kind == "bayes") {
        const double cf = number(member(j, "c_false", path), path + ".c_false");
        const double cm = number(member(j, "c_miss", path), path + ".c_miss");
        double cx = 0.0;
        if (j.contains("c_cross")) cx = number(j["c_cross"], path + ".c_cross");
        std::vector<double> priors;
        if (j.contains("priors")) {
            const json& p = j["priors"];
            if (!p.is_array()) schema_fail(path + ".priors", "expected an array");
            for (size_t i = 0; i < p.size(); ++i) {
                priors.push_back(number(p[i], path + ".priors[" + std::to_string(i) + "]"));
            }
            if (static_cast<int>(priors.size()) != m) {
                schema_fail(path + ".priors", "expected " + std::to_string(m) + " entries");
            }
        } else {
            priors.assign(static_cast<size_t>(m), 1.0 / m);
        }
        return RuleSpec::bayes(cf, cm, std::move(priors), cx);
    }
    schema_fail(path + ".kind", "unknown rule kind '" + kind +
                                    "' (expected and|or|majority|neyman-pearson|bayes)");
}

constexpr const char* kObjectId = "object";

FusionNetwork parse_network(const json& j, const std::string& path, int m,
                            const std::map<std::string, SensorSpec>& sensor_defs) {
    FusionNetwork net;
    net.m = m;
    net.vertices.push_back(Vertex::object(kObjectId));

    const json& sensors_j = member(j, "sensors", path);
    if (!sensors_j.is_array() || sensors_j.empty()) {
        schema_fail(path + ".sensors", "expected a non-empty array of sensor ids");
    }
    for (size_t i = 0; i < sensors_j.size(); ++i) {
        const std::string id = text(sensors_j[i], path + ".sensors[" + std::to_string(i) + "]");
        if (id == kObjectId) {
            schema_fail(path + ".sensors[" + std::to_string(i) + "]",
                        "'object' is a reserved vertex id");
        }
        if (!sensor_defs.count(id)) {
            schema_fail(path + ".sensors[" + std::to_string(i) + "]",
                        "sensor '" + id + "' is not defined in the scenario's sensors block");
        }
        net.vertices.push_back(Vertex::sensor(id));
        net.edges.emplace_back(kObjectId, id);
    }

    const json& centers_j = member(j, "centers", path);
    if (!centers_j.is_array() || centers_j.empty()) {
        schema_fail(path + ".centers", "expected a non-empty array of fusion centers");
    }
    for (size_t i = 0; i < centers_j.size(); ++i) {
        const std::string cpath = path + ".centers[" + std::to_string(i) + "]";
        const json& c = centers_j[i];
        const std::string id = text(member(c, "id", cpath), cpath + ".id");
        if (id == kObjectId) schema_fail(cpath + ".id", "'object' is a reserved vertex id");
        net.vertices.push_back(Vertex::center(id, parse_rule(member(c, "rule", cpath),
                                                             cpath + ".rule", m)));
        const json& parents = member(c, "parents", cpath);
        if (!parents.is_array() || parents.empty()) {
            schema_fail(cpath + ".parents", "expected a non-empty array of vertex ids");
        }
        for (size_t p = 0; p < parents.size(); ++p) {
            net.edges.emplace_back(
                text(parents[p], cpath + ".parents[" + std::to_string(p) + "]"), id);
        }
    }

    if (j.contains("cues")) {
        const json& cues = j["cues"];
        if (!cues.is_array()) schema_fail(path + ".cues", "expected an array");
        for (size_t i = 0; i < cues.size(); ++i) {
            const std::string cpath = path + ".cues[" + std::to_string(i) + "]";
            net.edges.emplace_back(text(member(cues[i], "from", cpath), cpath + ".from"),
                                   text(member(cues[i], "to", cpath), cpath + ".to"));
        }
    }

    const auto report = validate_network(net);
    if (!report.ok()) {
        schema_fail(path + ".network", "invalid fusion network\n" + report.to_string());
    }
    return net;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) fail("cannot open '" + tmp.string() + "' for writing");
        os << content;
        os.flush();
        if (!os) fail("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

}  // namespace

CoalesceMode parse_coalesce_mode(const std::string& s) {
    if (s == "exact") return CoalesceMode::exact();
    if (s == "off") return CoalesceMode::off();
    if (s.rfind("tol=", 0) == 0) {
        char* end = nullptr;
        const double tau = std::strtod(s.c_str() + 4, &end);
        require(end && *end == '\0' && tau >= 0.0 && std::isfinite(tau),
                "coalesce mode: bad tolerance in '" + s + "'");
        return CoalesceMode::tolerance(tau);
    }
    fail("coalesce mode: expected exact|off|tol=<tau>, got '" + s + "'");
}

std::string to_string(const CoalesceMode& mode) {
    switch (mode.kind) {
        case CoalesceKind::Off: return "off";
        case CoalesceKind::Exact: return "exact";
        case CoalesceKind::Tolerance: return "tol=" + format_double(mode.tau);
    }
    return "?";
}

Scenario load_scenario(const std::string& source) {
    json j;
    try {
        j = json::parse(source);
    } catch (const json::exception& e) {
        fail(std::string("scenario: document is not valid JSON: ") + e.what());
    }

    Scenario s;
    if (j.contains("name")) s.name = text(j["name"], "name");
    s.horizon = integer(member(j, "horizon", ""), "horizon");
    if (s.horizon < 1) schema_fail("horizon", "must be >= 1");

    int m = 2;
    if (j.contains("m")) {
        m = integer(j["m"], "m");
        if (m != 2) {
            schema_fail("m", "the sequential layer is binary; scenarios require m = 2");
        }
    }

    const json& sensors_j = member(j, "sensors", "");
    if (!sensors_j.is_object() || sensors_j.empty()) {
        schema_fail("sensors", "expected a non-empty object keyed by sensor id");
    }
    for (auto it = sensors_j.begin(); it != sensors_j.end(); ++it) {
        const std::string path = "sensors." + it.key();
        SensorSpec spec;
        spec.id = it.key();
        const json& sj = it.value();
        if (sj.contains("drift")) {
            const json& dj = sj["drift"];
            spec.drift = DriftSensorSpec{number(member(dj, "a", path + ".drift"), path + ".drift.a"),
                                         number(member(dj, "b", path + ".drift"), path + ".drift.b")};
        } else if (sj.contains("series")) {
            const json& arr = sj["series"];
            if (!arr.is_array()) schema_fail(path + ".series", "expected an array");
            for (size_t i = 0; i < arr.size(); ++i) {
                const std::string epath = path + ".series[" + std::to_string(i) + "]";
                const double pf = number(member(arr[i], "pf", epath), epath + ".pf");
                const double pd = number(member(arr[i], "pd", epath), epath + ".pd");
                try {
                    spec.series.push_back(ConfusionMatrix::binary(pf, pd));
                } catch (const Error& e) {
                    schema_fail(epath, e.what());
                }
            }
        } else {
            schema_fail(path, "sensor needs either a 'drift' spec or an explicit 'series'");
        }
        try {
            spec.resolve(s.horizon);
        } catch (const Error& e) {
            schema_fail(path, e.what());
        }
        s.sensors.emplace(spec.id, std::move(spec));
    }

    const json& stages_j = member(j, "stages", "");
    if (!stages_j.is_array() || stages_j.empty()) {
        schema_fail("stages", "expected a non-empty array");
    }
    for (size_t i = 0; i < stages_j.size(); ++i) {
        const std::string path = "stages[" + std::to_string(i) + "]";
        const json& stage_j = stages_j[i];
        StageSpec stage;
        const json& t = member(stage_j, "targets", path);
        const double pf = number(member(t, "pf", path + ".targets"), path + ".targets.pf");
        const double pd = number(member(t, "pd", path + ".targets"), path + ".targets.pd");
        try {
            stage.targets = TargetOperatingPoint(pf, pd);
        } catch (const Error& e) {
            schema_fail(path + ".targets", e.what());
        }
        stage.network = parse_network(member(stage_j, "network", path), path + ".network", m,
                                      s.sensors);
        s.stages.push_back(std::move(stage));
    }

    // Threshold nesting across stages: eta0' <= eta0 and eta1' >= eta1.
    for (size_t i = 1; i < s.stages.size(); ++i) {
        const Thresholds prev = wald_thresholds(s.stages[i - 1].targets);
        const Thresholds cur = wald_thresholds(s.stages[i].targets);
        if (cur.eta0 > prev.eta0 || cur.eta1 < prev.eta1) {
            schema_fail("stages[" + std::to_string(i) + "].targets",
                        "stage thresholds must nest: eta0'<=eta0 and eta1'>=eta1 (got eta0'=" +
                            format_double(cur.eta0) + " vs eta0=" + format_double(prev.eta0) +
                            ", eta1'=" + format_double(cur.eta1) +
                            " vs eta1=" + format_double(prev.eta1) + ")");
        }
    }

    if (j.contains("output")) {
        const json& out = j["output"];
        if (!out.is_object()) schema_fail("output", "expected an object");
        if (out.contains("coalesce")) {
            s.coalesce = parse_coalesce_mode(text(out["coalesce"], "output.coalesce"));
        }
        if (out.contains("plots")) {
            if (!out["plots"].is_boolean()) schema_fail("output.plots", "expected a boolean");
            s.plots = out["plots"].get<bool>();
        }
        if (out.contains("directory")) s.out_dir = text(out["directory"], "output.directory");
    }

    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << is.rdbuf();
    return load_scenario(buf.str());
}

ScenarioArtifacts run_scenario(const Scenario& scenario, const std::string& out_dir) {
    require(!out_dir.empty(), "run_scenario: output directory required");
    const MultiStageTest test = scenario.build_test();

    ScenarioArtifacts art;
    art.report = run_multistage(test, scenario.coalesce);
    const MultiStageReport& rep = art.report;
    const int n = scenario.horizon;

    std::filesystem::create_directories(out_dir);

    for (size_t s = 0; s < rep.per_stage.size(); ++s) {
        const StageReport& sr = rep.per_stage[s];
        std::ostringstream csv;
        csv << "k,stop_low_h0,stop_high_h0,stop_low_h1,stop_high_h1,pd_cum,pf_cum\n";
        for (int k = 1; k <= n + 1; ++k) {
            csv << k << "," << format_double(sr.stop_low[0][static_cast<size_t>(k)]) << ","
                << format_double(sr.stop_high[0][static_cast<size_t>(k)]) << ","
                << format_double(sr.stop_low[1][static_cast<size_t>(k)]) << ","
                << format_double(sr.stop_high[1][static_cast<size_t>(k)]) << ","
                << format_double(sr.pd_cum[static_cast<size_t>(k)]) << ","
                << format_double(sr.pf_cum[static_cast<size_t>(k)]) << "\n";
        }
        const std::filesystem::path file =
            std::filesystem::path(out_dir) / ("stage" + std::to_string(s + 1) + ".csv");
        write_file_atomic(file, csv.str());
        art.files_written.push_back(file.string());
    }

    auto& summary = art.summary;
    auto put = [&](const std::string& key, const std::string& value) {
        summary.emplace_back(key, value);
    };
    put("scenario", scenario.name);
    put("horizon", std::to_string(n));
    put("stages", std::to_string(rep.per_stage.size()));
    put("coalesce", to_string(scenario.coalesce));
    for (size_t s = 0; s < rep.per_stage.size(); ++s) {
        const StageReport& sr = rep.per_stage[s];
        const std::string p = "stage" + std::to_string(s + 1) + ".";
        const Thresholds th = test.stages[s].thresholds;
        const TargetOperatingPoint& target = scenario.stages[s].targets;
        put(p + "pf_target", format_double(target.pf_star));
        put(p + "pd_target", format_double(target.pd_star));
        put(p + "eta0", format_double(th.eta0));
        put(p + "eta1", format_double(th.eta1));
        put(p + "midpoint", format_double(th.midpoint()));
        put(p + "stop_mass_h0", format_double(sr.stop_mass(0)));
        put(p + "stop_mass_h1", format_double(sr.stop_mass(1)));
        put(p + "expected_k_h0", format_double(sr.expected_k[0]));
        put(p + "expected_k_h1", format_double(sr.expected_k[1]));
        put(p + "pd_cum_final", format_double(sr.pd_cum[static_cast<size_t>(n) + 1]));
        put(p + "pf_cum_final", format_double(sr.pf_cum[static_cast<size_t>(n) + 1]));
        put(p + "oscillation_h1",
            std::to_string(oscillation_sign_changes(sr.pmf(1), 2, 15)));
        const WaldDiagnostic wd = wald_diagnostic(sr, target);
        put(p + "wald_bound_pd", format_double(wd.bound_pd));
        put(p + "wald_bound_pf", format_double(wd.bound_pf));
        put(p + "wald_k_h1", std::to_string(wd.k_h1));
        put(p + "wald_k_h0", std::to_string(wd.k_h0));
        put(p + "wald_pd_cum_at_k", format_double(wd.pd_cum_at_k));
        put(p + "wald_pf_cum_at_k", format_double(wd.pf_cum_at_k));
        put(p + "wald_pd_satisfied", wd.pd_satisfied ? "true" : "false");
        put(p + "wald_pf_satisfied", wd.pf_satisfied ? "true" : "false");
    }
    put("final_pd", format_double(rep.pd_final));
    put("final_pf", format_double(rep.pf_final));
    put("alive_paths_at_horizon", std::to_string(rep.alive_paths_at_horizon));
    put("growth_base", format_double(rep.growth_base));

    std::ostringstream sum;
    for (const auto& [k, v] : summary) sum << k << " = " << v << "\n";
    const std::filesystem::path sum_file = std::filesystem::path(out_dir) / "summary.txt";
    write_file_atomic(sum_file, sum.str());
    art.files_written.push_back(sum_file.string());

    if (scenario.plots) {
        for (size_t s = 0; s < rep.per_stage.size(); ++s) {
            const StageReport& sr = rep.per_stage[s];
            std::vector<ChartSeries> series;
            auto tail = [&](const std::vector<double>& v) {
                return std::vector<double>(v.begin() + 1, v.end());
            };
            series.push_back({"P(K=k | H=0)", "#1f77b4", tail(sr.pmf(0))});
            series.push_back({"P(K=k | H=1)", "#d62728", tail(sr.pmf(1))});
            const std::filesystem::path file =
                std::filesystem::path(out_dir) / ("stage" + std::to_string(s + 1) + "_pmf.svg");
            write_file_atomic(file, render_line_chart("Stage " + std::to_string(s + 1) +
                                                          " stopping-time distribution",
                                                      "k", "probability", 1, series));
            art.files_written.push_back(file.string());
        }
        std::vector<ChartSeries> curves;
        const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"};
        for (size_t s = 0; s < rep.per_stage.size(); ++s) {
            const StageReport& sr = rep.per_stage[s];
            auto tail = [&](const std::vector<double>& v) {
                return std::vector<double>(v.begin() + 1, v.end());
            };
            curves.push_back({"stage " + std::to_string(s + 1) + " P_D^k",
                              palette[(2 * s) % 8], tail(sr.pd_cum)});
            curves.push_back({"stage " + std::to_string(s + 1) + " P_F^k",
                              palette[(2 * s + 1) % 8], tail(sr.pf_cum)});
        }
        const std::filesystem::path file = std::filesystem::path(out_dir) / "cumulative.svg";
        write_file_atomic(file, render_line_chart("Cumulative detection / false alarm", "k",
                                                  "probability", 1, curves));
        art.files_written.push_back(file.string());
    }

    return art;
}

bool VerifyResult::passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const VerifyCheck& c) { return c.passed; });
}

std::string VerifyResult::to_string() const {
    std::ostringstream os;
    os << "verify: horizon " << horizon_used << "\n";
    for (const auto& c : checks) {
        os << (c.passed ? "  [pass] " : "  [FAIL] ") << c.name << ": " << format_double(c.value)
           << " (limit " << format_double(c.limit) << ")\n";
    }
    return os.str();
}

VerifyResult verify_scenario(const Scenario& scenario, int max_horizon, std::uint64_t mc_trials,
                             std::uint64_t seed) {
    require(max_horizon >= 1, "verify: max horizon must be >= 1");
    const Scenario down = scenario.truncated(max_horizon);
    const MultiStageTest test = down.build_test();
    const int n = down.horizon;

    VerifyResult out;
    out.horizon_used = n;

    const MultiStageReport exact = run_multistage(test, down.coalesce);
    const MultiStageReport brute = oracle::brute_force_multistage(test);

    double max_delta = 0.0;
    for (size_t s = 0; s < exact.per_stage.size(); ++s) {
        const StageReport& a = exact.per_stage[s];
        const StageReport& b = brute.per_stage[s];
        for (int h = 0; h < 2; ++h) {
            for (int k = 1; k <= n + 1; ++k) {
                max_delta = std::max(
                    max_delta, std::abs(a.stop_low[static_cast<size_t>(h)][static_cast<size_t>(k)] -
                                        b.stop_low[static_cast<size_t>(h)][static_cast<size_t>(k)]));
                max_delta = std::max(
                    max_delta,
                    std::abs(a.stop_high[static_cast<size_t>(h)][static_cast<size_t>(k)] -
                             b.stop_high[static_cast<size_t>(h)][static_cast<size_t>(k)]));
            }
        }
        for (int k = 1; k <= n + 1; ++k) {
            max_delta = std::max(max_delta, std::abs(a.pd_cum[static_cast<size_t>(k)] -
                                                     b.pd_cum[static_cast<size_t>(k)]));
            max_delta = std::max(max_delta, std::abs(a.pf_cum[static_cast<size_t>(k)] -
                                                     b.pf_cum[static_cast<size_t>(k)]));
        }
    }
    max_delta = std::max(max_delta, std::abs(exact.pd_final - brute.pd_final));
    max_delta = std::max(max_delta, std::abs(exact.pf_final - brute.pf_final));
    out.checks.push_back({"brute-force max |delta| over all probabilities", max_delta, 1e-10,
                          max_delta <= 1e-10});

    const bool counts_match = exact.alive_paths_at_horizon == brute.alive_paths_at_horizon;
    out.checks.push_back({"brute-force alive-path count match",
                          static_cast<double>(exact.alive_paths_at_horizon) -
                              static_cast<double>(brute.alive_paths_at_horizon),
                          0.0, counts_match});

    if (mc_trials > 0) {
        for (int h = 0; h < 2; ++h) {
            const auto mc = oracle::monte_carlo_multistage(test, h, mc_trials, seed);
            const auto fin = mc.final_high();
            const double exact_fin = (h == 1) ? exact.pd_final : exact.pf_final;
            const double z_fin =
                fin.std_error > 0.0 ? std::abs(fin.estimate - exact_fin) / fin.std_error : 0.0;
            out.checks.push_back({std::string("monte-carlo |z| of final ") +
                                      (h == 1 ? "P_D'" : "P_F'"),
                                  z_fin, 3.0, z_fin <= 3.0});
            for (size_t s = 0; s < exact.per_stage.size(); ++s) {
                const auto ek = mc.per_stage[s].expected_k();
                const double exact_ek = exact.per_stage[s].expected_k[static_cast<size_t>(h)];
                const double z = ek.std_error > 0.0
                                     ? std::abs(ek.estimate - exact_ek) / ek.std_error
                                     : std::abs(ek.estimate - exact_ek);
                out.checks.push_back({"monte-carlo |z| of stage " + std::to_string(s + 1) +
                                          " E(K|H=" + std::to_string(h) + ")",
                                      z, 3.0, z <= 3.0});
            }
        }
    }

    return out;
}

}  // namespace fuseq
