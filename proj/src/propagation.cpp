#include "dysonmap/propagation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace dysonmap {

namespace {

constexpr cd kI{0.0, 1.0};

void require_generator(const GeneratorFn& H, Index dim) {
    if (!H.eval) throw PreconditionFailed("generator has no evaluation function");
    if (H.dim != dim)
        throw InvalidDimension("generator dimension " + std::to_string(H.dim) + " does not match " +
                               std::to_string(dim));
}

void check_step_guard(const GeneratorFn& H, const TimeGrid& grid, const SolverOptions& opts) {
    if (opts.substeps < 1) throw PreconditionFailed("substeps must be >= 1");
    const double step = grid.dt() / static_cast<double>(opts.substeps);
    const double worst = max_generator_norm(H, grid);
    if (worst * step > opts.step_guard) {
        const long rec = recommended_steps(H, grid, opts);
        throw StepSizeRefused("step guard violated: ||H||*dt = " + std::to_string(worst * step) + " > " +
                                  std::to_string(opts.step_guard) + "; use at least " + std::to_string(rec) +
                                  " grid steps at " + std::to_string(opts.substeps) + " substeps",
                              rec);
    }
}

// Integrate over `total` equal RK4 steps on [t0, t1], storing every `stride`-th state.
template <typename T, typename Rhs>
std::vector<T> integrate(const Rhs& rhs, const T& y0, double t0, double t1, long total, long stride) {
    std::vector<T> out;
    out.reserve(static_cast<std::size_t>(total / stride) + 1);
    out.push_back(y0);
    const double h = (t1 - t0) / static_cast<double>(total);
    T y = y0;
    for (long j = 0; j < total; ++j) {
        const double t = t0 + static_cast<double>(j) * h;
        y = rk4_step(rhs, t, y, h);
        if ((j + 1) % stride == 0) {
            if (!all_finite(y)) {
                const double at = t + h;
                throw Divergence("integration diverged at t=" + std::to_string(at), at);
            }
            out.push_back(y);
        }
    }
    return out;
}

Operator trusted_of(const Operator& m, Index n) { return leading_block(m, n); }

}  // namespace

double relative_residual(double numerator, double denominator) {
    return denominator > 1e-14 ? numerator / denominator : numerator;
}

double max_generator_norm(const GeneratorFn& H, const TimeGrid& grid) {
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) worst = std::max(worst, norm1(H(grid.at(k))));
    return worst;
}

long recommended_steps(const GeneratorFn& H, const TimeGrid& grid, const SolverOptions& opts) {
    const double worst = max_generator_norm(H, grid);
    const double needed = worst * (grid.t1 - grid.t0) / (opts.step_guard * static_cast<double>(opts.substeps));
    return std::max(1L, static_cast<long>(std::ceil(needed * (1.0 + 1e-12))));
}

double StateTrajectory::max_tail_mass() const {
    return tail_mass.empty() ? 0.0 : *std::max_element(tail_mass.begin(), tail_mass.end());
}

DysonTrajectory propagate_dyson(const GeneratorFn& H, const Operator& eta0, const TimeGrid& grid,
                                const SolverOptions& opts) {
    grid.validate();
    if (eta0.rows() != eta0.cols()) throw InvalidDimension("eta0 must be square");
    require_dim(eta0.rows());
    require_generator(H, eta0.rows());
    if (opts.guard_band < 0 || opts.guard_band >= eta0.rows())
        throw InvalidDimension("guard band must leave a non-empty trusted block");
    check_step_guard(H, grid, opts);

    const auto rhs = [&H](double t, const Operator& eta) -> Operator { return -kI * (eta * H(t)); };
    const long total = grid.steps * opts.substeps;

    DysonTrajectory traj;
    traj.grid = grid;
    traj.options = opts;
    traj.eta0 = eta0;
    traj.rho0 = eta0.adjoint() * eta0;
    traj.eta = integrate(rhs, eta0, grid.t0, grid.t1, total, opts.substeps);
    traj.rcond.reserve(traj.eta.size());
    for (const auto& e : traj.eta) traj.rcond.push_back(static_cast<double>(e.partialPivLu().rcond()));

    if (opts.measure_order && total % 4 == 0) {
        const Operator fine = traj.eta.back();
        const Operator half = integrate(rhs, eta0, grid.t0, grid.t1, total / 2, total / 2).back();
        const Operator quarter = integrate(rhs, eta0, grid.t0, grid.t1, total / 4, total / 4).back();
        traj.observed_order = observed_order((quarter - half).norm(), (half - fine).norm());
    }
    return traj;
}

StateTrajectory propagate_state(const GeneratorFn& H, const State& psi0, const TimeGrid& grid,
                                const SolverOptions& opts) {
    grid.validate();
    require_dim(psi0.size());
    require_generator(H, psi0.size());
    check_step_guard(H, grid, opts);

    const auto rhs = [&H](double t, const State& psi) -> State { return -kI * (H(t) * psi); };
    StateTrajectory out;
    out.grid = grid;
    out.options = opts;
    out.states = integrate(rhs, psi0, grid.t0, grid.t1, grid.steps * opts.substeps, opts.substeps);
    out.tail_mass.reserve(out.states.size());
    const Index guard = std::clamp<Index>(opts.guard_band, 1, psi0.size() - 1);
    for (const auto& s : out.states) out.tail_mass.push_back(tail_mass(s, guard));
    return out;
}

MetricSeries metric_of(const DysonTrajectory& traj) {
    MetricSeries m;
    m.rho.reserve(traj.eta.size());
    m.min_eigenvalue.reserve(traj.eta.size());
    for (std::size_t k = 0; k < traj.eta.size(); ++k) {
        Operator rho = traj.eta[k].adjoint() * traj.eta[k];
        const Operator herm = 0.5 * (rho + rho.adjoint());
        const Eigen::SelfAdjointEigenSolver<Operator> es(herm, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues()(0);
        if (lo < -1e-10) {
            throw PreconditionFailed("metric lost positivity at t=" + std::to_string(traj.grid.at(k)) +
                                     " (min eigenvalue " + std::to_string(lo) + ")");
        }
        m.min_eigenvalue.push_back(lo);
        m.rho.push_back(std::move(rho));
    }
    return m;
}

CounterpartSeries hermitian_counterpart(const DysonTrajectory& traj, const GeneratorFn& H) {
    require_generator(H, traj.dim());
    const Index n = traj.trusted();
    CounterpartSeries out;
    out.h.reserve(traj.eta.size());
    out.hermiticity_residual.reserve(traj.eta.size());
    for (std::size_t k = 0; k < traj.eta.size(); ++k) {
        const double t = traj.grid.at(k);
        const Operator& eta = traj.eta[k];
        // ηHη⁻¹ = (η⁻ᵀ (ηH)ᵀ)ᵀ; solve on the transposed system to reuse invert_apply.
        const Operator etaH = eta * H(t);
        const auto solved = invert_apply(eta.transpose(), etaH.transpose(), traj.options.rcond_floor, t);
        Operator h = 2.0 * solved.value.transpose();
        const Operator blk = trusted_of(h, n);
        out.hermiticity_residual.push_back(relative_residual((blk - blk.adjoint()).norm(), blk.norm()));
        out.h.push_back(std::move(h));
    }
    return out;
}

std::vector<double> dyson_relation_residual(const DysonTrajectory& traj, const GeneratorFn& H) {
    require_generator(H, traj.dim());
    const auto deta = time_derivative(traj.eta, traj.grid.dt());
    std::vector<double> r;
    r.reserve(traj.eta.size());
    for (std::size_t k = 0; k < traj.eta.size(); ++k) {
        const double t = traj.grid.at(k);
        const Operator& eta = traj.eta[k];
        // Right-multiplication by η⁻¹ is a solve with ηᵀ on the transposed operands.
        const Operator lhs = kI * deta[k];
        const Operator sim = eta * H(t);
        const auto gauge = invert_apply(eta.transpose(), lhs.transpose(), traj.options.rcond_floor, t);
        const auto simil = invert_apply(eta.transpose(), sim.transpose(), traj.options.rcond_floor, t);
        const double num = (gauge.value - simil.value).norm();
        r.push_back(relative_residual(num, simil.value.norm()));
    }
    return r;
}

DysonTrajectory unitary_transform_propagate(const GeneratorFn& Hh, const Operator& U0, const TimeGrid& grid,
                                            const SolverOptions& opts) {
    grid.validate();
    require_generator(Hh, U0.rows());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.at(k);
        const Operator h = Hh(t);
        const double res = relative_residual((h - h.adjoint()).norm(), h.norm());
        if (res > 1e-10)
            throw PreconditionFailed("generator is not Hermitian at t=" + std::to_string(t) +
                                     " (residual " + std::to_string(res) + ")");
    }
    const Operator I = Operator::Identity(U0.rows(), U0.cols());
    if ((U0 * U0.adjoint() - I).norm() > 1e-10) throw PreconditionFailed("initial transformation is not unitary");
    return propagate_dyson(Hh, U0, grid, opts);
}

}  // namespace dysonmap
