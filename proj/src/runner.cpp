#include "dysonmap/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace dysonmap {

namespace {

using nlohmann::json;

json complex_json(cd z) { return json::array({z.real(), z.imag()}); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double isospectrality_max(const DiagnosticsReport& r) {
    const Series* a = r.find_series("isospectrality_m0");
    const Series* b = r.find_series("isospectrality_m1");
    if (!a || !b) return std::nan("");
    return std::max(a->max(), b->max());
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const StepSizeRefused*>(&e) ||
        dynamic_cast<const InvalidDimension*>(&e))
        return kExitConfigError;
    if (dynamic_cast<const ScenarioInvalid*>(&e)) return kExitCheckFailure;
    return kExitNumericalFailure;
}

void write_series_csv(const DiagnosticsReport& report, const Scenario& s, std::ostream& out) {
    const LRQuantities* lr = report.lr ? &*report.lr : nullptr;
    std::vector<std::vector<double>> phases;
    std::vector<std::string> header = {"t"};
    if (lr) {
        for (const char* h : {"u_re", "u_im", "f", "theta_re", "theta_im", "chi"}) header.emplace_back(h);
        const int levels = static_cast<int>(std::min<Index>(4, s.trusted()));
        for (int m = 0; m < levels; ++m) {
            phases.push_back(lr_phase(s, *lr, m));
            header.push_back("phi_" + std::to_string(m));
        }
    }
    for (const auto& ser : report.series) header.push_back(ser.name);

    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (std::size_t k = 0; k < report.grid.size(); ++k) {
        out << format_double(report.grid.at(k));
        if (lr) {
            for (double v : {lr->u[k].real(), lr->u[k].imag(), lr->f[k], lr->theta[k].real(), lr->theta[k].imag(),
                             lr->chi[k]})
                out << "," << format_double(v);
            for (const auto& p : phases) out << "," << format_double(p[k]);
        }
        for (const auto& ser : report.series) out << "," << format_double(ser.samples[k]);
        out << "\n";
    }
}

std::string summary_json(const DiagnosticsReport& report, const RunSpec& spec) {
    const Scenario& s = spec.scenario;
    json j;
    j["format_version"] = kOutputFormatVersion;
    j["scenario"] = report.scenario;
    j["passed"] = report.passed();
    j["exit_code"] = report.passed() ? kExitPass : kExitCheckFailure;
    j["failed_checks"] = report.failed();

    json checks = json::object();
    for (const auto& c : report.checks) {
        checks[c.name] = {{"value", finite_or_null(c.value)},
                          {"tolerance", c.tolerance},
                          {"passed", c.passed},
                          {"enabled", c.enabled},
                          {"kind", c.kind}};
    }
    j["checks"] = checks;

    const Tolerances& t = spec.diagnostics.tolerances;
    j["tolerances"] = {{"algebraic", t.algebraic},
                       {"integrator", t.integrator},
                       {"perturbative_floor", t.perturbative_floor},
                       {"perturbative_c", t.perturbative_c},
                       {"quasi_hermiticity", t.quasi_hermiticity},
                       {"pairing_identity", t.pairing_identity},
                       {"tail_warning", t.tail_warning},
                       {"stencil_order", t.stencil_order}};

    j["tail_mass_max"] = report.tail_mass_max;
    j["condition_max"] = report.condition_max;
    j["metric_constancy_max"] = report.find_series("metric_constancy")->max();
    j["isospectrality_max"] = finite_or_null(isospectrality_max(report));
    j["warnings"] = report.warnings;

    const PTReport& pt = report.pt;
    j["pt"] = {{"label", report.pt_label},
               {"symmetric", pt.symmetric},
               {"omega_even", pt.omega_even},
               {"alpha_odd", pt.alpha_odd},
               {"beta_odd", pt.beta_odd},
               {"max_im_energy", pt.max_im_energy_all},
               {"max_im_energy_per_level", pt.max_im_energy},
               {"max_im_omega", pt.max_im_omega},
               {"max_im_alpha_beta", pt.max_im_alpha_beta}};

    const InitialMap& im = report.initial_map;
    json constraints = json::array();
    for (const auto& c : im.checks)
        constraints.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"passed", c.passed}});
    j["initial_map"] = {{"gamma0", complex_json(im.gamma0)},
                        {"lambda0", complex_json(im.lambda0)},
                        {"sign", im.sign},
                        {"sign_mismatch", im.sign_mismatch},
                        {"validated", im.validated},
                        {"constraints", constraints}};

    j["settings"] = {{"dim", s.dim},
                     {"guard", s.solver.guard_band},
                     {"kappa", s.kappa},
                     {"grid", {{"t0", s.grid.t0}, {"t1", s.grid.t1}, {"steps", s.grid.steps}}},
                     {"substeps", s.solver.substeps},
                     {"step_guard", s.solver.step_guard},
                     {"perturbation_order", s.perturbation_order},
                     {"lr_convention", s.lr_convention == LrConvention::Published ? "published" : "self_consistent"},
                     {"checks", {{"analytic_evolution", spec.diagnostics.checks.analytic_evolution}}}};
    return j.dump(2) + "\n";
}

RunOutcome run_scenario(const RunSpec& spec, const std::filesystem::path& out_dir) {
    RunOutcome out;
    out.report = diagnose(spec.scenario, spec.diagnostics);
    out.exit_code = out.report.passed() ? kExitPass : kExitCheckFailure;

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream csv(out_dir / "series.csv");
        write_series_csv(out.report, spec.scenario, csv);
    }
    {
        std::ofstream js(out_dir / "summary.json");
        js << summary_json(out.report, spec);
    }
    return out;
}

SweepAxis SweepAxis::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 4)
        throw ConfigError("sweep axis '" + text + "' must have the form key:start:stop:count", "axis");
    SweepAxis a;
    a.key = parts[0];
    try {
        std::size_t used = 0;
        a.start = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument("start");
        a.stop = std::stod(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument("stop");
        a.count = std::stol(parts[3], &used);
        if (used != parts[3].size()) throw std::invalid_argument("count");
    } catch (const std::exception&) {
        throw ConfigError("sweep axis '" + text + "': start, stop and count must be numbers", "axis");
    }
    if (a.count < 1) throw ConfigError("sweep axis count must be >= 1", "axis");
    return a;
}

double SweepAxis::value(long k) const {
    if (count == 1) return start;
    return start + static_cast<double>(k) * ((stop - start) / static_cast<double>(count - 1));
}

SweepRow evaluate_point(const RunSpec& spec) {
    const InitialMap im = assess_initial_map(spec.scenario);
    const Scenario s = with_initial_map(spec.scenario, im);
    const PTReport pt = pt_analysis(s);
    const GeneratorFn H = hamiltonian_generator(s);
    const DysonTrajectory traj = propagate_dyson(H, initial_dyson_map(s), s.grid, s.solver);

    SweepRow row;
    row.pt_label = to_string(pt.phase);
    row.max_im_energy = pt.max_im_energy_all;
    const auto mc = metric_constancy(traj);
    row.metric_constancy_max = *std::max_element(mc.begin(), mc.end());
    row.isospectrality_max = std::nan("");
    if (s.validated) {
        Scenario s2 = s;
        s2.perturbation_order = 2;
        const LRQuantities lr2 = compute_lr(s2);
        double worst = 0.0;
        for (int m = 0; m < 2; ++m)
            for (double v : isospectrality_check(traj, H, s2, lr2, m)) worst = std::max(worst, v);
        row.isospectrality_max = worst;
    }
    return row;
}

std::vector<SweepRow> run_sweep(const std::string& scenario_path, const std::vector<std::string>& overrides,
                                const SweepAxis& axis, int workers) {
    // Parse every point up front so configuration errors surface before any work.
    std::vector<RunSpec> specs;
    specs.reserve(static_cast<std::size_t>(axis.count));
    for (long k = 0; k < axis.count; ++k) {
        auto ov = overrides;
        ov.push_back(axis.key + "=" + format_double(axis.value(k)));
        specs.push_back(parse_scenario(scenario_path, ov));
    }

    std::vector<SweepRow> rows(specs.size());
    std::vector<std::exception_ptr> errors(specs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < specs.size();) {
            try {
                rows[i] = evaluate_point(specs[i]);
                rows[i].value = axis.value(static_cast<long>(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(1, specs.size())));
    std::vector<std::thread> pool;
    for (int w = 1; w < n; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    // Report the first failure in axis order so errors are deterministic too.
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const SweepAxis& axis, std::ostream& out) {
    out << axis.key << ",pt_label,max_im_energy,metric_constancy_max,isospectrality_max\n";
    for (const auto& r : rows) {
        out << format_double(r.value) << "," << r.pt_label << "," << format_double(r.max_im_energy) << ","
            << format_double(r.metric_constancy_max) << "," << format_double(r.isospectrality_max) << "\n";
    }
}

int workers_from_env() {
    if (const char* v = std::getenv("DYSONMAP_WORKERS")) {
        char* end = nullptr;
        const long n = std::strtol(v, &end, 10);
        if (end != v && *end == '\0' && n >= 1) return static_cast<int>(std::min(n, 256L));
        throw ConfigError(std::string("DYSONMAP_WORKERS must be a positive integer (got '") + v + "')", "DYSONMAP_WORKERS");
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace dysonmap
