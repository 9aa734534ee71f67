// dysonmap: run, diagnose, sweep and classify driven-oscillator scenarios.
//
// Exit codes: 0 all enabled checks pass, 1 a check failed, 2 configuration
// error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "dysonmap/runner.hpp"

using namespace dysonmap;

namespace {

void print_report(const DiagnosticsReport& r) {
    std::printf("scenario %s  pt=%s  tail_mass_max=%.3e  condition_max=%.3e\n", r.scenario.c_str(),
                r.pt_label.c_str(), r.tail_mass_max, r.condition_max);
    for (const auto& c : r.checks) {
        const char* verdict = !c.enabled ? (c.passed ? "pass*" : "FAIL*") : (c.passed ? "pass" : "FAIL");
        const char* cmp = c.kind == "order" ? ">=" : "<=";
        std::printf("  %-6s %-34s %.6e %s %.3e\n", verdict, c.name.c_str(), c.value, cmp, c.tolerance);
    }
    for (const auto& w : r.warnings) std::printf("  warning: %s\n", w.c_str());
    std::printf("%s\n", r.passed() ? "PASSED" : "FAILED");
}

void print_pt(const std::string& name, const PTReport& pt) {
    std::printf("scenario %s\n", name.c_str());
    std::printf("  phase               %s\n", to_string(pt.phase).c_str());
    std::printf("  symmetric           %s (omega even %d, alpha odd %d, beta odd %d)\n", pt.symmetric ? "yes" : "no",
                pt.omega_even, pt.alpha_odd, pt.beta_odd);
    for (int m = 0; m < 4; ++m) std::printf("  max|Im E_%d|         %.17g\n", m, pt.max_im_energy[m]);
    std::printf("  max|Im omega|       %.17g\n", pt.max_im_omega);
    std::printf("  max|Im alpha*beta|  %.17g\n", pt.max_im_alpha_beta);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-dependent Dyson maps for the driven non-Hermitian oscillator"};
    app.require_subcommand(1);

    std::string file, out_dir = "dysonmap_out", axis_text;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "Diagnose a scenario and write series.csv and summary.json");
    run->add_option("file", file, "Scenario file")->required();
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--set", overrides, "Override a scenario key: key=value")->allow_extra_args(false);

    auto* diag = app.add_subcommand("diagnose", "Print every check with its value and tolerance");
    diag->add_option("file", file, "Scenario file")->required();
    diag->add_option("--set", overrides, "Override a scenario key: key=value")->allow_extra_args(false);

    auto* sweep = app.add_subcommand("sweep", "Scan one scalar key; prints a CSV table");
    sweep->add_option("file", file, "Scenario file")->required();
    sweep->add_option("--axis", axis_text, "key:start:stop:count")->required();
    auto* sweep_out = sweep->add_option("--out", out_dir, "Also write sweep.csv into this directory");
    sweep->add_option("--set", overrides, "Override a scenario key: key=value")->allow_extra_args(false);

    auto* pt = app.add_subcommand("pt-phase", "Classify the PT phase of a scenario");
    pt->add_option("file", file, "Scenario file")->required();
    pt->add_option("--set", overrides, "Override a scenario key: key=value")->allow_extra_args(false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfigError;
    }

    try {
        if (*run) {
            const RunSpec spec = parse_scenario(file, overrides);
            const RunOutcome res = run_scenario(spec, out_dir);
            print_report(res.report);
            std::printf("wrote %s/series.csv and %s/summary.json\n", out_dir.c_str(), out_dir.c_str());
            return res.exit_code;
        }
        if (*diag) {
            const RunSpec spec = parse_scenario(file, overrides);
            const DiagnosticsReport r = diagnose(spec.scenario, spec.diagnostics);
            print_report(r);
            return r.passed() ? kExitPass : kExitCheckFailure;
        }
        if (*sweep) {
            const SweepAxis axis = SweepAxis::parse(axis_text);
            const auto rows = run_sweep(file, overrides, axis, workers_from_env());
            write_sweep_csv(rows, axis, std::cout);
            if (*sweep_out) {
                std::filesystem::create_directories(out_dir);
                std::ofstream f(std::filesystem::path(out_dir) / "sweep.csv");
                write_sweep_csv(rows, axis, f);
            }
            return kExitPass;
        }
        if (*pt) {
            const RunSpec spec = parse_scenario(file, overrides);
            print_pt(spec.scenario.name, pt_analysis(spec.scenario));
            return kExitPass;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    }
    return kExitConfigError;
}
