// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "dysonmap/diagnostics.hpp"
#include "dysonmap/runner.hpp"
#include "dysonmap/scenario_io.hpp"

using namespace dysonmap;

namespace {

// Pinned tolerances.
constexpr double kMetricS1 = 1e-6;
constexpr double kMetricS2Min = 1e-3;
constexpr double kMinOrder = 1.8;
constexpr double kStencilFloor = 1e-10;
constexpr double kPairing = 1e-6;
constexpr double kPerturbativeFloor = 1e-6;
constexpr double kCubicFloor = 1e-9;
constexpr double kEigenAtKappaMax = 1e-3;
constexpr double kHandForms = 1e-8;
constexpr double kEnergyExact = 1e-15;
constexpr double kImEnergy = 1e-10;
constexpr double kStaticEta = 1e-7;
constexpr double kStaticH = 1e-8;
constexpr double kUnitarity = 1e-7;

const std::vector<double> kKappas = {0.1, 0.05, 0.025};

int failures = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail) {
    std::printf("%s  criterion %2d  %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string path(const std::string& f) { return std::string(DYSONMAP_SCENARIO_DIR) + "/" + f; }

double vmax(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

double lrel(const Operator& d, const Operator& ref, Index n) {
    return relative_residual(leading_block(d, n).norm(), leading_block(ref, n).norm());
}

struct Run {
    Scenario s;
    GeneratorFn H;
    DysonTrajectory traj;
};

Run prepare(const std::string& file, const std::vector<std::string>& ov = {}) {
    Run r;
    r.s = parse_scenario(path(file), ov).scenario;
    r.s = with_initial_map(r.s, assess_initial_map(r.s));
    r.H = hamiltonian_generator(r.s);
    r.traj = propagate_dyson(r.H, initial_dyson_map(r.s), r.s.grid, r.s.solver);
    return r;
}

std::string kappa_override(double k) { return "kappa=" + format_double(k); }

std::string scaling_detail(const ScalingFit& f) {
    std::string d = "C=" + fmt("%.3g", f.c) + " r=[";
    for (std::size_t k = 0; k < f.residuals.size(); ++k) d += (k ? ", " : "") + fmt("%.3g", f.residuals[k]);
    d += "] orders=[";
    for (std::size_t k = 0; k < f.orders.size(); ++k) d += (k ? ", " : "") + fmt("%.2f", f.orders[k]);
    return d + "]";
}

// Observed order of a stencil residual under step halving, or "at floor".
bool order_ok(double coarse, double fine, std::string& detail) {
    if (coarse <= kStencilFloor && fine <= kStencilFloor) {
        detail += "at floor (" + fmt("%.2e", coarse) + ")";
        return true;
    }
    const double p = observed_order(coarse, fine);
    detail += "order " + fmt("%.2f", p);
    return p >= kMinOrder;
}

double r2_max(const Run& r, const TimeGrid& g) {
    const auto tr = propagate_dyson(r.H, initial_dyson_map(r.s), g, r.s.solver);
    return vmax(quasi_hermiticity_residuals(tr, r.H).r2);
}

}  // namespace

int main() {
    std::printf("acceptance: 10 criteria\n");

    // S1 for each κ of the sweep; index 0 is S1 itself.
    std::vector<Run> sweep;
    for (double k : kKappas) sweep.push_back(prepare("s1_unbroken.yaml", {kappa_override(k)}));
    const Run& s1 = sweep[0];
    const Run s2 = prepare("s2_broken.yaml");

    // 1. Metric constancy.
    {
        const double a = vmax(metric_constancy(s1.traj)), b = vmax(metric_constancy(s2.traj));
        report(1, a <= kMetricS1 && b > kMetricS2Min, "metric constancy",
               "S1 " + fmt("%.3e", a) + " <= 1e-6, S2 " + fmt("%.3e", b) + " > 1e-3");
    }

    // 2. TD quasi-Hermiticity: second-order decay of r2 on S1 and S2.
    {
        std::string d1 = "S1 ", d2 = "S2 ";
        const bool a = order_ok(vmax(quasi_hermiticity_residuals(s1.traj, s1.H).r2), r2_max(s1, s1.s.grid.refined(2)), d1);
        const bool b = order_ok(vmax(quasi_hermiticity_residuals(s2.traj, s2.H).r2), r2_max(s2, s2.s.grid.refined(2)), d2);
        report(2, a && b, "TD quasi-Hermiticity identity", d1 + ", " + d2 + " (need >= 1.8)");
    }

    // 3. Pairing under the fixed metric, ψ0 = |0>, ψ̃0 = |1>.
    {
        const Scenario& s = s1.s;
        const Operator rho0 = s1.traj.rho0;
        const auto a = propagate_state(s1.H, basis_state(s.dim, 0), s.grid, s.solver);
        const auto b = propagate_state(s1.H, basis_state(s.dim, 1), s.grid, s.solver);
        const cd p0 = a.states[0].dot(rho0 * b.states[0]);
        double w = 0.0;
        for (std::size_t k = 0; k < a.states.size(); ++k) w = std::max(w, std::abs(a.states[k].dot(rho0 * b.states[k]) - p0));
        report(3, w <= kPairing, "unitarity under the fixed metric", fmt("max drift %.3e <= 1e-6", w));
    }

    // 4. Similarity transformation: Hermiticity of 2ηHη⁻¹ and the closed-form h.
    {
        std::vector<double> herm, closed;
        for (const Run& r : sweep) {
            const auto hc = hermitian_counterpart(r.traj, r.H);
            const LRQuantities lr = compute_lr(r.s);
            double w = 0.0;
            for (std::size_t k = 0; k < hc.h.size(); ++k)
                w = std::max(w, lrel(Operator(closed_form_counterpart(r.s, lr, k) - hc.h[k]), hc.h[k], r.s.trusted()));
            herm.push_back(vmax(hc.hermiticity_residual));
            closed.push_back(w);
        }
        const ScalingFit fh = kappa_scaling(kKappas, herm, 2.0, kPerturbativeFloor);
        const ScalingFit fc = kappa_scaling(kKappas, closed, 2.0, kPerturbativeFloor);
        report(4, fh.passed && fc.passed, "similarity transformation",
               "hermiticity " + scaling_detail(fh) + "; closed form " + scaling_detail(fc));
    }

    // 5. Closed-form LR pipeline.
    {
        auto deviations = [&](LrConvention conv) {
            std::vector<double> rs;
            for (const Run& r : sweep) {
                Scenario s = r.s;
                s.lr_convention = conv;
                const LRQuantities lr = compute_lr(s);
                double w = 0.0;
                for (int m = 0; m < 3; ++m) w = std::max(w, vmax(lr_propagator_deviation(s, lr, m)));
                rs.push_back(w);
            }
            return kappa_scaling(kKappas, rs, 2.0, kPerturbativeFloor);
        };
        // Hand forms on S1: u = −0.1i, f = 0.01, θ = −0.05i(1 − e^{−2it}).
        const LRQuantities lr = compute_lr(s1.s);
        double hand = 0.0;
        for (std::size_t k = 0; k < lr.size(); ++k) {
            const double t = lr.t[k];
            const cd theta = cd(0.0, -0.05) * (1.0 - std::exp(cd(0.0, -2.0 * t)));
            hand = std::max({hand, std::abs(lr.u[k] - cd(0.0, -0.1)), std::abs(lr.f[k] - 0.01), std::abs(lr.theta[k] - theta)});
        }
        const ScalingFit pub = deviations(s1.s.lr_convention);
        report(5, pub.passed && hand <= kHandForms, "closed-form LR pipeline",
               "U|m> vs numeric under h: " + scaling_detail(pub) + "; hand forms " + fmt("%.2e", hand) + " <= 1e-8");
        const ScalingFit sc = deviations(LrConvention::SelfConsistent);
        std::printf("      info  criterion  5  with i dtheta/dt = 2 omega theta + 2 u* the same comparison gives %s (%s)\n",
                    scaling_detail(sc).c_str(), sc.passed ? "within tolerance" : "outside tolerance");
    }

    // 6. Observables: closed-form quadratures against direct conjugation, and the pairing for o = x1.
    {
        std::vector<double> quad, obs;
        for (const Run& r : sweep) {
            const LRQuantities lr = compute_lr(r.s);
            double w = 0.0;
            for (std::size_t k = 0; k < lr.size(); ++k)
                w = std::max(w, *quadrature_observables(r.s, lr, k, &r.traj.eta[k]).discrepancy);
            quad.push_back(w);
            const auto eq = equivalence_checks(r.traj, r.H, basis_state(r.s.dim, 0), basis_state(r.s.dim, 1), &r.s, &lr);
            obs.push_back(vmax(eq.observable));
        }
        const ScalingFit fq = kappa_scaling(kKappas, quad, 2.0, kPerturbativeFloor);
        const ScalingFit fo = kappa_scaling(kKappas, obs, 2.0, kPerturbativeFloor);
        report(6, fq.passed && fo.passed, "observables", "quadratures " + scaling_detail(fq) + "; pairing " + scaling_detail(fo));
    }

    // 7. Eigensystem and isospectrality.
    {
        std::vector<double> eig, iso;
        for (const Run& r : sweep) {
            Scenario s = r.s;
            s.perturbation_order = 2;
            const LRQuantities lr = compute_lr(s);
            double we = 0.0, wi = 0.0;
            for (int m = 0; m < 2; ++m) {
                for (std::size_t k = 0; k < lr.size(); ++k) we = std::max(we, eigensystem(s, lr, m, k).residual);
                wi = std::max(wi, vmax(isospectrality_check(r.traj, r.H, s, lr, m)));
            }
            eig.push_back(we);
            iso.push_back(wi);
        }
        const ScalingFit fe = kappa_scaling(kKappas, eig, 3.0, kCubicFloor);
        const ScalingFit fi = kappa_scaling(kKappas, iso, 3.0, kCubicFloor);
        Scenario s = s1.s;
        s.perturbation_order = 2;
        const double de = std::max(std::abs(eigenvalue(s, 0, s.grid.t0) - cd(0.02, 0.0)),
                                   std::abs(eigenvalue(s, 1, s.grid.t0) - cd(2.02, 0.0)));
        const bool pass = fe.passed && fi.passed && eig[0] <= kEigenAtKappaMax && iso[0] <= kEigenAtKappaMax &&
                          de <= kEnergyExact;
        report(7, pass, "eigensystem and isospectrality",
               "h " + scaling_detail(fe) + "; H " + scaling_detail(fi) + "; |E - (0.02, 2.02)| " + fmt("%.1e", de));
    }

    // 8. PT phase boundary over φ ∈ [0, π], 41 points.
    {
        const SweepAxis axis = SweepAxis::parse("coefficients.alpha.value.arg:0:3.141592653589793:41");
        const auto rows = run_sweep(path("pt_sweep.yaml"), {}, axis, 1);
        const double kappa = parse_scenario(path("pt_sweep.yaml")).scenario.kappa;
        bool labels = true;
        double w = 0.0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const bool at_boundary = rows[k].value == std::numbers::pi / 2;
            labels = labels && (rows[k].pt_label == (at_boundary ? "UNBROKEN" : "BROKEN"));
            w = std::max(w, std::abs(rows[k].max_im_energy - 2.0 * kappa * kappa * std::abs(std::cos(rows[k].value))));
        }
        report(8, labels && w <= kImEnergy, "PT phase boundary",
               std::string(labels ? "flips only at phi = pi/2" : "label mismatch") + fmt(", max|Im E| error %.2e", w));
    }

    // 9. Time-independent recovery with a constant Hermitian H.
    {
        Scenario s = parse_scenario(path("static_hermitian.yaml")).scenario;
        const GeneratorFn H = hamiltonian_generator(s);
        const Operator h0 = H(s.grid.t0);
        const Eigen::SelfAdjointEigenSolver<Operator> es(h0);
        const auto l = ladder_operators(s.dim);
        // Non-trivial starting map besides the identity.
        const Operator starts[] = {Operator::Identity(s.dim, s.dim),
                                   matrix_exponential(Operator(cd(0.1, 0.05) * l.a + cd(0.0, 0.03) * l.a_dagger))};
        double weta = 0.0, wh = 0.0;
        for (const Operator& eta0 : starts) {
            const auto tr = propagate_dyson(H, eta0, s.grid, s.solver);
            const Operator inv = invert_apply(eta0, Operator(Operator::Identity(s.dim, s.dim))).value;
            const Operator hs = 2.0 * eta0 * h0 * inv;
            const auto hc = hermitian_counterpart(tr, H);
            for (std::size_t k = 0; k < tr.eta.size(); ++k) {
                const double dt = tr.grid.at(k) - s.grid.t0;
                const Eigen::VectorXcd ph = (es.eigenvalues().cast<cd>() * cd(0.0, -dt)).array().exp();
                const Operator oracle = eta0 * es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
                weta = std::max(weta, (tr.eta[k] - oracle).norm() / oracle.norm());
                wh = std::max(wh, lrel(Operator(hc.h[k] - hs), hs, s.trusted()));
            }
        }
        report(9, weta <= kStaticEta && wh <= kStaticH, "time-independent recovery",
               "eta vs exp " + fmt("%.2e", weta) + " <= 1e-7, h drift " + fmt("%.2e", wh) + " <= 1e-8");
    }

    // 10. Unitary transform under a Hermitian generator with sinusoidal omega.
    {
        Scenario s = parse_scenario(path("unitary_sinusoid.yaml")).scenario;
        const GeneratorFn H = hamiltonian_generator(s);
        const auto tr = unitary_transform_propagate(H, displacement(cd(0.3, 0.0), s.dim), s.grid, s.solver);
        double w = 0.0;
        for (const Operator& u : tr.eta) w = std::max(w, (u * u.adjoint() - Operator::Identity(s.dim, s.dim)).norm());
        report(10, H.hermitian && w <= kUnitarity, "unitary-transform generality", fmt("max |U U^dag - I| %.2e <= 1e-7", w));
    }

    std::printf("acceptance: %d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
