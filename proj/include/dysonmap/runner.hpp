#pragma once

// Orchestration behind the command-line tool: runs, sweeps and output files.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dysonmap/diagnostics.hpp"
#include "dysonmap/scenario_io.hpp"

namespace dysonmap {

/// Process exit codes; mutually exclusive.
enum ExitCode : int { kExitPass = 0, kExitCheckFailure = 1, kExitConfigError = 2, kExitNumericalFailure = 3 };

/// Maps an exception thrown during a run to its exit code.
int exit_code_for(const std::exception& e);

inline constexpr int kOutputFormatVersion = 1;

/// One row per grid point: t, LR quantities (when available), then every residual series.
void write_series_csv(const DiagnosticsReport& report, const Scenario& s, std::ostream& out);

/// Summary document (JSON, keys sorted).
std::string summary_json(const DiagnosticsReport& report, const RunSpec& spec);

struct RunOutcome {
    DiagnosticsReport report;
    int exit_code = kExitPass;
};

/// Diagnose `spec` and write series.csv and summary.json into `out_dir`.
RunOutcome run_scenario(const RunSpec& spec, const std::filesystem::path& out_dir);

struct SweepAxis {
    std::string key;
    double start = 0.0;
    double stop = 0.0;
    long count = 1;

    /// "key:start:stop:count"
    static SweepAxis parse(const std::string& text);
    double value(long k) const;
};

struct SweepRow {
    double value = 0.0;
    std::string pt_label;
    double max_im_energy = 0.0;
    double metric_constancy_max = 0.0;
    /// NaN when the scenario fails the initial-map constraints.
    double isospectrality_max = 0.0;
};

/// The sweep columns for a single scenario.
SweepRow evaluate_point(const RunSpec& spec);

/// Evaluates every axis point (concurrently up to `workers`), rows in axis order.
std::vector<SweepRow> run_sweep(const std::string& scenario_path, const std::vector<std::string>& overrides,
                                const SweepAxis& axis, int workers);

void write_sweep_csv(const std::vector<SweepRow>& rows, const SweepAxis& axis, std::ostream& out);

/// DYSONMAP_WORKERS, defaulting to the hardware concurrency (at least 1).
int workers_from_env();

/// `%.17g`, with nan/inf spelled out.
std::string format_double(double v);

}  // namespace dysonmap
