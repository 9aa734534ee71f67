#pragma once

// Driven oscillator H(t) = ω(t) a†a + κ[α(t) a + β(t) a†] and the closed-form
// machinery built on top of it: the initial Dyson map η(t0) = exp[γa + λa†],
// the drive functions u, f, the Lewis–Riesenfeld solution, observables,
// eigensystem and PT classification.

#include <array>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dysonmap/coefficient.hpp"
#include "dysonmap/fock.hpp"
#include "dysonmap/numerics.hpp"
#include "dysonmap/propagation.hpp"

namespace dysonmap {

/// How the displacement θ(t) and the LR phases are integrated.
///
/// `Published`: iθ̇ = 2ωθ + u*, Φ_m = −∫{2mω + f + Re(uθ)}.
/// `SelfConsistent`: iθ̇ = 2ωθ + 2u*, Φ_m = −∫{2mω + 2f + 2Re(uθ)}, which is
/// what makes e^{iΦ_m} D[θ] |m> an exact solution under h = 2[ωa†a + ua + u*a† + f].
enum class LrConvention { Published, SelfConsistent };

struct Scenario {
    std::string name = "unnamed";
    Coefficient omega = Coefficient::constant({1.0, 0.0});
    Coefficient alpha;
    Coefficient beta;
    double kappa = 0.0;
    Index dim = 32;
    TimeGrid grid{0.0, 2.0 * std::numbers::pi, 1000};
    /// Unset: derived from the quasi-Hermiticity constraint.
    std::optional<cd> gamma0;
    cd lambda0{0.0, 0.0};
    cd theta0{0.0, 0.0};
    int perturbation_order = 1;
    LrConvention lr_convention = LrConvention::Published;
    SolverOptions solver;
    /// Set once the initial-map constraints have been confirmed.
    bool validated = false;

    void validate() const;
    Index guard() const { return solver.guard_band; }
    Index trusted() const { return dim - solver.guard_band; }
};

Operator build_hamiltonian(const Scenario& s, double t);
GeneratorFn hamiltonian_generator(const Scenario& s);

struct NamedCheck {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
};

struct InitialMap {
    cd gamma0{0.0, 0.0};
    cd lambda0{0.0, 0.0};
    /// +1: γ = κ[β* − α]/ω; −1: the negated convention.
    int sign = +1;
    /// The primary sign failed the intertwining residual but (i)–(iv) held.
    bool sign_mismatch = false;
    bool validated = false;
    std::vector<NamedCheck> checks;  ///< (i)..(v) in order

    std::vector<std::string> failed() const;
};

/// Evaluates constraints (i)–(v) and picks the sign; never throws on failure.
InitialMap assess_initial_map(const Scenario& s);

/// Like assess_initial_map but throws ScenarioInvalid when no sign works.
InitialMap derive_initial_map_params(const Scenario& s);

/// Copy of `s` carrying γ(t0), λ(t0) from `m` and its validation flag.
Scenario with_initial_map(Scenario s, const InitialMap& m);

/// exp[γ a + λ a†]; requires gamma0 to be set.
Operator initial_dyson_map(const Scenario& s);

/// Lewis–Riesenfeld quantities at the grid points, plus the interval
/// midpoints that the RK4 stages and Simpson panels need.
struct LRQuantities {
    TimeGrid grid;
    std::vector<double> t;
    std::vector<double> chi;
    std::vector<cd> alpha_tilde;
    std::vector<cd> beta_tilde;
    std::vector<cd> u;
    std::vector<double> f;
    std::vector<cd> xi;
    std::vector<cd> theta;
    std::vector<cd> upsilon;  ///< exp(iΦ_0), set by solve_theta

    // Midpoint samples, one per grid interval.
    std::vector<double> chi_mid;
    std::vector<cd> alpha_tilde_mid;
    std::vector<cd> beta_tilde_mid;
    std::vector<cd> u_mid;
    std::vector<double> f_mid;
    std::vector<cd> theta_mid;

    std::size_t size() const { return t.size(); }
};

/// χ, α̃ and β̃ (cumulative from t0).
LRQuantities phase_integrals(const Scenario& s);
/// u, f (per perturbation order) and ξ = u/ω.
LRQuantities drive_functions(const Scenario& s, LRQuantities lr);
/// θ(t) by RK4 and the overall phase Υ(t).
LRQuantities solve_theta(const Scenario& s, LRQuantities lr);
/// Full chain: phase_integrals → drive_functions → solve_theta.
LRQuantities compute_lr(const Scenario& s);

/// Φ_m at the grid points.
std::vector<double> lr_phase(const Scenario& s, const LRQuantities& lr, int m);

struct AnalyticEvolution {
    Operator V;  ///< Υ D[θ] R[χ]
    Operator U;  ///< V(t,t0) V†(t0,t0)
};

AnalyticEvolution analytic_evolution(const Scenario& s, const LRQuantities& lr, std::size_t k);
/// |φ_m(t_k)> = V(t_k, t0)|m>.
State lr_basis_state(const Scenario& s, const LRQuantities& lr, int m, std::size_t k);

/// 2[ω a†a + u a + u* a† + f] at grid point k.
Operator closed_form_counterpart(const Scenario& s, const LRQuantities& lr, std::size_t k);

struct Quadratures {
    Operator X1;
    Operator X2;
    /// max_ℓ ‖X_ℓ − η⁻¹x_ℓη‖/‖η⁻¹x_ℓη‖ on the trusted block, when η was given.
    std::optional<double> discrepancy;
};

/// x_1 = (a† + a)/2, x_2 = (a† − a)/2i.
std::array<Operator, 2> bare_quadratures(Index dim);
/// η⁻¹ x_ℓ η computed numerically.
std::array<Operator, 2> conjugated_quadratures(const Operator& eta, double t = std::nan(""));

Quadratures quadrature_observables(const Scenario& s, const LRQuantities& lr, std::size_t k,
                                   const Operator* eta = nullptr);

/// ⟨m|V†(h/2)V|n⟩ from the closed-form coefficients 𝒜 and ℬ.
cd matrix_elements(const Scenario& s, const LRQuantities& lr, int m, int n, std::size_t k);
/// Same element assembled numerically from V and h.
cd matrix_elements_numeric(const Scenario& s, const LRQuantities& lr, int m, int n, std::size_t k);

struct EigenPair {
    cd energy;
    State zeta;      ///< D[−ξ*]|m>
    double residual; ///< ‖h ζ − ℰ ζ‖ with h from the closed form
};

/// ℰ_m = 2ωm − 2κ²αβ/ω; requires second-order f.
EigenPair eigensystem(const Scenario& s, const LRQuantities& lr, int m, std::size_t k);
/// ℰ_m(t) straight from the coefficients.
cd eigenvalue(const Scenario& s, int m, double t);

enum class PTPhase { Unbroken, Broken };
std::string to_string(PTPhase p);

struct PTReport {
    bool omega_even = false;  ///< ω*(−t) = ω(t)
    bool alpha_odd = false;   ///< α*(−t) = −α(t)
    bool beta_odd = false;    ///< β*(−t) = −β(t)
    bool symmetric = false;
    PTPhase phase = PTPhase::Broken;
    std::array<double, 4> max_im_energy{};  ///< per m = 0..3
    double max_im_energy_all = 0.0;
    double max_im_omega = 0.0;
    double max_im_alpha_beta = 0.0;
};

PTReport pt_analysis(const Scenario& s);

}  // namespace dysonmap
