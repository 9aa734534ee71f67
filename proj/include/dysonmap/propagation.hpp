#pragma once

// Time-ordered evolution of Dyson maps and states.
//
// The Dyson map obeys i dη/dt = η H(t); its solution η(t0) T exp[−i∫H] is
// realized by fixed-step RK4 on the matrix ODE, so ordering is respected to
// fourth order even when H(t) does not commute with itself at other times.

#include <functional>
#include <limits>
#include <vector>

#include "dysonmap/fock.hpp"
#include "dysonmap/numerics.hpp"

namespace dysonmap {

struct SolverOptions {
    /// RK4 steps per grid interval; the grid only fixes where samples are stored.
    long substeps = 1;
    /// Refuse to integrate when ‖H(t)‖₁ · dt_step exceeds this at any grid point.
    double step_guard = 0.1;
    /// Top Fock levels excluded from identity checks (truncation artifacts).
    Index guard_band = 6;
    /// Attach the observed RK4 order from two coarser endpoint solves.
    bool measure_order = false;
    double rcond_floor = kRcondFloor;
};

/// Time-dependent generator H(t) of fixed dimension. `hermitian` is a claim
/// used by diagnostics only.
struct GeneratorFn {
    std::function<Operator(double)> eval;
    Index dim = 0;
    bool hermitian = false;

    Operator operator()(double t) const { return eval(t); }
};

struct DysonTrajectory {
    TimeGrid grid;
    std::vector<Operator> eta;  ///< η(t_k); eta[0] == eta0
    Operator eta0;
    Operator rho0;              ///< η†(t0) η(t0)
    std::vector<double> rcond;  ///< reciprocal condition estimate per sample
    SolverOptions options;
    double observed_order = std::numeric_limits<double>::quiet_NaN();

    Index dim() const { return eta0.rows(); }
    /// Size of the leading block used for truncation-sensitive checks.
    Index trusted() const { return dim() - options.guard_band; }
};

struct StateTrajectory {
    TimeGrid grid;
    std::vector<State> states;
    std::vector<double> tail_mass;
    SolverOptions options;

    double max_tail_mass() const;
};

/// Integrate i dη/dt = η H(t) from eta0 over the grid.
DysonTrajectory propagate_dyson(const GeneratorFn& H, const Operator& eta0, const TimeGrid& grid,
                                const SolverOptions& opts = {});

/// Integrate i dψ/dt = H(t) ψ with the same stepper.
StateTrajectory propagate_state(const GeneratorFn& H, const State& psi0, const TimeGrid& grid,
                                const SolverOptions& opts = {});

struct MetricSeries {
    std::vector<Operator> rho;
    std::vector<double> min_eigenvalue;
};

/// ρ(t_k) = η†η with its smallest eigenvalue; throws if ρ is not positive.
MetricSeries metric_of(const DysonTrajectory& traj);

struct CounterpartSeries {
    std::vector<Operator> h;
    /// ‖h − h†‖/‖h‖ on the trusted block.
    std::vector<double> hermiticity_residual;
};

/// h(t_k) = 2 η H η⁻¹.
CounterpartSeries hermitian_counterpart(const DysonTrajectory& traj, const GeneratorFn& H);

/// ‖i(∂tη)η⁻¹ − ηHη⁻¹‖/‖ηHη⁻¹‖ with ∂tη from the stored samples.
std::vector<double> dyson_relation_residual(const DysonTrajectory& traj, const GeneratorFn& H);

/// Hermitian variant: i dŨ/dt = Ũ H̃(t) for Hermitian H̃ and unitary Ũ(t0).
DysonTrajectory unitary_transform_propagate(const GeneratorFn& Hh, const Operator& U0, const TimeGrid& grid,
                                            const SolverOptions& opts = {});

/// Largest ‖H(t_k)‖₁ over the grid.
double max_generator_norm(const GeneratorFn& H, const TimeGrid& grid);

/// Grid step count needed to satisfy the step guard with the given substeps.
long recommended_steps(const GeneratorFn& H, const TimeGrid& grid, const SolverOptions& opts);

/// Relative Frobenius norm with an absolute fallback when the scale vanishes.
double relative_residual(double numerator, double denominator);

}  // namespace dysonmap
