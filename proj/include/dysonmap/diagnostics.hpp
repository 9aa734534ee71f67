#pragma once

// Named residuals for the identities the formalism relies on, each with a
// tolerance and a pass/fail verdict. All series of one report share a grid.

#include <optional>
#include <string>
#include <vector>

#include "dysonmap/model.hpp"
#include "dysonmap/propagation.hpp"

namespace dysonmap {

struct Tolerances {
    double algebraic = 1e-10;
    /// Metric constancy and pairings limited by the integrator.
    double integrator = 1e-6;
    /// Perturbative checks pass below max(perturbative_floor, C κ^p).
    double perturbative_floor = 1e-6;
    double perturbative_c = 1.0;
    /// Static intertwining H†ρ(t) = ρ(t)H.
    double quasi_hermiticity = 1e-7;
    /// |⟨ψ|ρ|ψ̃⟩ − ⟨ηψ|ηψ̃⟩| relative to the pairing scale.
    double pairing_identity = 1e-12;
    double tail_warning = 1e-8;
    /// Minimum measured order of the O(dt²) stencil residuals.
    double stencil_order = 1.8;

    double perturbative(double kappa, int power) const;
};

/// Which checks decide pass/fail. Disabled checks are still reported.
struct CheckToggles {
    /// Off by default: with the published θ equation the closed-form
    /// propagator differs from the numeric one at O(κ).
    bool analytic_evolution = false;
};

struct DiagnosticsConfig {
    Tolerances tolerances;
    CheckToggles checks;
};

struct Series {
    std::string name;
    std::vector<double> samples;
    std::string norm;  ///< "frobenius", "vector2" or "scalar"

    double max() const;
};

struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    bool enabled = true;
    /// "max" compares value ≤ tolerance; "order" compares value ≥ tolerance.
    std::string kind = "max";
};

struct DiagnosticsReport {
    std::string scenario;
    TimeGrid grid;
    std::vector<Series> series;      ///< ordered by name
    std::vector<CheckResult> checks; ///< ordered by name
    double tail_mass_max = 0.0;
    double condition_max = 0.0;
    std::string pt_label;
    std::vector<std::string> warnings;
    InitialMap initial_map;
    PTReport pt;
    std::optional<LRQuantities> lr;

    bool passed() const;
    std::vector<std::string> failed() const;
    const Series* find_series(const std::string& name) const;
    const CheckResult* find_check(const std::string& name) const;
};

/// ‖ρ(t_k) − ρ(t0)‖/‖ρ(t0)‖ on the trusted block.
std::vector<double> metric_constancy(const DysonTrajectory& traj);

struct QuasiHermiticityResiduals {
    /// ‖H†ρ − ρH + i∂tρ‖/‖ρH‖ on the full matrix (an identity of the ODE).
    std::vector<double> r2;
    /// ‖H†ρ − ρH‖/‖ρH‖ on the trusted block (holds only for a static metric).
    std::vector<double> r7;
};

QuasiHermiticityResiduals quasi_hermiticity_residuals(const DysonTrajectory& traj, const GeneratorFn& H);

struct EquivalenceResiduals {
    /// |⟨ψ|ρ(t)|ψ̃⟩ − ⟨ηψ|ηψ̃⟩| / max(1, ‖ηψ‖‖ηψ̃‖).
    std::vector<double> pairing_identity;
    /// |⟨ψ(t)|ρ0|ψ̃(t)⟩ − ⟨ψ(t0)|ρ0|ψ̃(t0)⟩|.
    std::vector<double> metric_pairing;
    /// |⟨ψ|ρ(t) X1|ψ̃⟩ − ⟨ηψ|x1|ηψ̃⟩| / max(1, |⟨ηψ|x1|ηψ̃⟩|), when the closed form is available.
    std::vector<double> observable;
    double tail_mass_max = 0.0;
};

/// ψ and ψ̃ are propagated under H; φ = ηψ. The observable check needs `s` and `lr`.
EquivalenceResiduals equivalence_checks(const DysonTrajectory& traj, const GeneratorFn& H, const State& psi0,
                                        const State& psi_tilde0, const Scenario* s = nullptr,
                                        const LRQuantities* lr = nullptr);

/// ‖H w − (ℰ_m/2) w‖/‖w‖ with w = η⁻¹ζ_m. Needs perturbation_order 2.
std::vector<double> isospectrality_check(const DysonTrajectory& traj, const GeneratorFn& H, const Scenario& s,
                                         const LRQuantities& lr, int m);

struct AnalyticComparison {
    std::vector<double> deviation;  ///< ‖η⁻¹U η0 ψ0 − ψ(t)‖ per sample
    double max = 0.0;
};

/// Closed-form propagator against direct propagation under H.
AnalyticComparison analytic_vs_numeric(const Scenario& s, const LRQuantities& lr, const DysonTrajectory& traj,
                                       const GeneratorFn& H, const State& psi0);

/// ‖U(t)|m⟩ − φ_m(t)‖ with φ_m propagated under the closed-form h.
std::vector<double> lr_propagator_deviation(const Scenario& s, const LRQuantities& lr, int m);

struct ScalingFit {
    std::vector<double> kappas;
    std::vector<double> residuals;
    double power = 0.0;
    double c = 0.0;             ///< r(κ_max)/κ_max^power
    std::vector<double> orders; ///< log(r_k/r_{k+1})/log(κ_k/κ_{k+1})
    bool passed = false;
};

/// Pass iff r_k ≤ max(floor, 1.5 C κ_k^power) for every k.
ScalingFit kappa_scaling(std::vector<double> kappas, std::vector<double> residuals, double power, double floor);

/// Run every applicable check on a scenario.
DiagnosticsReport diagnose(const Scenario& s, const DiagnosticsConfig& cfg = {});

}  // namespace dysonmap
