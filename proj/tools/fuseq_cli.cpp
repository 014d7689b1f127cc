#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fuseq/scenario.hpp"

namespace {

int cmd_run(const std::string& file, std::string out_dir, const std::string& coalesce,
            bool plots) {
    fuseq::Scenario scenario = fuseq::load_scenario_file(file);
    if (!coalesce.empty()) scenario.coalesce = fuseq::parse_coalesce_mode(coalesce);
    if (plots) scenario.plots = true;
    if (out_dir.empty()) out_dir = scenario.out_dir;
    if (out_dir.empty()) out_dir = scenario.name + "_out";

    const fuseq::ScenarioArtifacts art = fuseq::run_scenario(scenario, out_dir);
    for (const auto& f : art.files_written) std::cout << "wrote " << f << "\n";
    std::printf("final P_D' = %.12g, P_F' = %.12g, growth base = %.6g\n", art.report.pd_final,
                art.report.pf_final, art.report.growth_base);
    return 0;
}

int cmd_verify(const std::string& file, int max_horizon, std::uint64_t trials,
               std::uint64_t seed) {
    const fuseq::Scenario scenario = fuseq::load_scenario_file(file);
    const fuseq::VerifyResult res = fuseq::verify_scenario(scenario, max_horizon, trials, seed);
    std::cout << res.to_string();
    if (!res.passed()) {
        std::cerr << "verification FAILED\n";
        return 1;
    }
    std::cout << "verification passed\n";
    return 0;
}

int cmd_thresholds(double pf, double pd) {
    const fuseq::Thresholds th =
        fuseq::wald_thresholds(fuseq::TargetOperatingPoint(pf, pd));
    std::printf("eta0 = %.17g\neta1 = %.17g\nmidpoint = %.17g\n", th.eta0, th.eta1,
                th.midpoint());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fuseq: exact performance analysis of fused sequential detection"};
    app.require_subcommand(1);

    std::string scenario_file, out_dir, coalesce;
    bool plots = false;
    auto* run = app.add_subcommand("run", "run a scenario and emit CSV/summary/chart artifacts");
    run->add_option("scenario", scenario_file, "scenario file (JSON)")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--coalesce", coalesce, "exact | off | tol=<tau>");
    run->add_flag("--plots", plots, "also emit SVG charts");

    std::string verify_file;
    int max_horizon = 12;
    std::uint64_t trials = 1000000;
    std::uint64_t seed = 20130218;
    auto* verify =
        app.add_subcommand("verify", "cross-check the engine against brute force and Monte Carlo");
    verify->add_option("scenario", verify_file, "scenario file (JSON)")->required();
    verify->add_option("--max-horizon", max_horizon, "truncate the scenario to this horizon")
        ->check(CLI::Range(1, 20));
    verify->add_option("--mc-trials", trials, "Monte Carlo trials (0 disables)");
    verify->add_option("--seed", seed, "Monte Carlo seed");

    double pf = 0.0, pd = 0.0;
    auto* thresholds = app.add_subcommand("thresholds", "print Wald thresholds for a target point");
    thresholds->add_option("--pf", pf, "target false alarm probability")->required();
    thresholds->add_option("--pd", pd, "target detection probability")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(scenario_file, out_dir, coalesce, plots);
        if (verify->parsed()) return cmd_verify(verify_file, max_horizon, trials, seed);
        if (thresholds->parsed()) return cmd_thresholds(pf, pd);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
