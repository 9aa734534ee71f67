#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dysonmap/model.hpp"

using namespace dysonmap;
using std::numbers::pi;

namespace {

constexpr cd I1{0.0, 1.0};

Scenario base(cd alpha, cd beta, double kappa) {
    Scenario s;
    s.name = "test";
    s.alpha = Coefficient::constant(alpha);
    s.beta = Coefficient::constant(beta);
    s.kappa = kappa;
    s.solver.substeps = 4;
    return s;
}

Scenario s1(double kappa = 0.1, int order = 1) {
    Scenario s = base(I1, I1, kappa);
    s.perturbation_order = order;
    return with_initial_map(s, derive_initial_map_params(s));
}

Scenario s2() { return base(1.0, I1, 0.1); }

std::size_t index_of_pi(const Scenario& s) { return s.grid.index_of(pi); }

}  // namespace

TEST_CASE("scenario validation") {
    Scenario s = s1();
    CHECK_NOTHROW(s.validate());
    s.kappa = -0.1;
    CHECK_THROWS_AS(s.validate(), PreconditionFailed);
    s = s1();
    s.perturbation_order = 3;
    CHECK_THROWS_AS(s.validate(), PreconditionFailed);
    s = s1();
    s.solver.guard_band = s.dim;
    CHECK_THROWS_AS(s.validate(), InvalidDimension);
}

TEST_CASE("build_hamiltonian") {
    SUBCASE("kappa = 0, omega = 1 gives a^dag a") {
        Scenario s = s1(0.0);
        CHECK((build_hamiltonian(s, 0.3) - number_operator(s.dim)).norm() == 0.0);
    }
    SUBCASE("S1 at dim 2") {
        Scenario s = s1();
        s.dim = 2;
        s.solver.guard_band = 1;
        Operator expect(2, 2);
        expect << 0.0, 0.1 * I1, 0.1 * I1, 1.0;
        CHECK((build_hamiltonian(s, 0.0) - expect).norm() < 1e-15);
        // H − H† = κ[(α − β*) a + (β − α*) a†] = 0.2i (a + a†).
        const Operator h = build_hamiltonian(s, 0.0);
        CHECK((h - h.adjoint()).norm() == doctest::Approx(0.2 * std::sqrt(2.0)).epsilon(1e-14));
        CHECK_FALSE(hamiltonian_generator(s).hermitian);
    }
    SUBCASE("alpha = beta* is Hermitian") {
        Scenario s = base(cd(0.5, 0.3), cd(0.5, -0.3), 0.1);
        const Operator h = build_hamiltonian(s, 1.0);
        CHECK((h - h.adjoint()).norm() == 0.0);
        CHECK(hamiltonian_generator(s).hermitian);
    }
}

TEST_CASE("initial map parameters") {
    SUBCASE("S1") {
        const InitialMap m = derive_initial_map_params(base(I1, I1, 0.1));
        CHECK(std::abs(m.gamma0 - cd(0.0, -0.2)) < 1e-15);
        CHECK(m.lambda0 == cd(0.0, 0.0));
        CHECK(m.sign == 1);
        CHECK_FALSE(m.sign_mismatch);
        CHECK(m.validated);
        REQUIRE(m.checks.size() == 5);
        for (const auto& c : m.checks) CHECK(c.passed);
        CHECK(m.checks[4].value <= 1e-8);
    }
    SUBCASE("kappa = 0") {
        const Scenario s = with_initial_map(base(I1, I1, 0.0), derive_initial_map_params(base(I1, I1, 0.0)));
        CHECK(*s.gamma0 == cd(0.0, 0.0));
        CHECK((initial_dyson_map(s) - Operator::Identity(s.dim, s.dim)).norm() == 0.0);
    }
    SUBCASE("S2 names check (ii)") {
        try {
            derive_initial_map_params(s2());
            FAIL("expected ScenarioInvalid");
        } catch (const ScenarioInvalid& e) {
            const auto& f = e.failed_checks();
            CHECK(std::find_if(f.begin(), f.end(), [](const std::string& n) { return n.rfind("(ii)", 0) == 0; }) !=
                  f.end());
        }
        const InitialMap m = assess_initial_map(s2());
        CHECK_FALSE(m.validated);
        CHECK_FALSE(with_initial_map(s2(), m).validated);
    }
    SUBCASE("drifting constraint fails (iii)") {
        Scenario s = base(I1, I1, 0.1);
        s.alpha = Coefficient::sinusoid(0.0, cd(0.0, 0.5), cd(0.0, 1.0), 1.0);
        const InitialMap m = assess_initial_map(s);
        CHECK_FALSE(m.validated);
        CHECK_FALSE(m.checks[2].passed);
    }
    SUBCASE("initial map needs gamma0") {
        CHECK_THROWS_AS(initial_dyson_map(base(I1, I1, 0.1)), PreconditionFailed);
    }
}

TEST_CASE("phase integrals") {
    const Scenario s = s1();
    const LRQuantities lr = phase_integrals(s);
    REQUIRE(lr.size() == s.grid.size());
    for (std::size_t k = 0; k < lr.size(); ++k) {
        const double t = s.grid.at(k);
        CHECK(lr.chi[k] == doctest::Approx(t).epsilon(1e-15));
        CHECK(std::abs(lr.alpha_tilde[k] - (std::exp(I1 * t) - 1.0)) < 1e-9);
        CHECK(std::abs(lr.beta_tilde[k] - (1.0 - std::exp(-I1 * t))) < 1e-9);
    }
    CHECK(std::abs(lr.alpha_tilde[index_of_pi(s)] - cd(-2.0, 0.0)) < 1e-9);
    CHECK(lr.chi[0] == 0.0);
    CHECK(lr.alpha_tilde[0] == cd(0.0, 0.0));
    CHECK(lr.beta_tilde[0] == cd(0.0, 0.0));

    SUBCASE("Simpson error drops by 16 on a sinusoidal omega") {
        auto end_value = [](long steps) {
            Scenario v = base(I1, I1, 0.1);
            v.omega = Coefficient::sinusoid(0.0, 0.5, 1.0, 1.0);
            v.grid = TimeGrid(0.0, 3.0, steps);
            v.gamma0 = cd(0.0, -0.2);
            return phase_integrals(v).alpha_tilde.back();
        };
        const cd a = end_value(8), b = end_value(16), c = end_value(32);
        CHECK(std::abs(a - b) / std::abs(b - c) == doctest::Approx(16.0).epsilon(0.1));
    }
}

TEST_CASE("drive functions") {
    for (int order : {1, 2}) {
        const Scenario s = s1(0.1, order);
        const LRQuantities lr = drive_functions(s, phase_integrals(s));
        for (std::size_t k = 0; k < lr.size(); ++k) {
            CHECK(std::abs(lr.u[k] - cd(0.0, -0.1)) < 1e-9);
            CHECK(lr.f[k] == doctest::Approx(order == 1 ? 0.01 : 0.02).epsilon(1e-8));
            CHECK(std::abs(lr.xi[k] - lr.u[k]) < 1e-15);
        }
    }
    SUBCASE("u(t0) = omega gamma + kappa alpha for validated scenarios") {
        std::vector<Scenario> all = {s1(), s1(0.0), base(cd(0.5, 0.3), cd(0.5, -0.3), 0.1)};
        Scenario w = base(0.3, 0.3, 0.1);
        w.omega = Coefficient::sinusoid(0.0, 0.5, 1.0, 1.0);
        all.push_back(w);
        Scenario r = base(cd(0.0, 2.0), cd(0.0, 0.5), 0.2);
        r.omega = Coefficient::constant(1.7);
        all.push_back(r);
        for (Scenario v : all) {
            v = with_initial_map(v, derive_initial_map_params(v));
            const LRQuantities lr = drive_functions(v, phase_integrals(v));
            const double t0 = v.grid.t0;
            CHECK(std::abs(lr.u[0] - (v.omega(t0) * *v.gamma0 + v.kappa * v.alpha(t0))) < 1e-15);
        }
    }
}

TEST_CASE("solve_theta") {
    SUBCASE("S1 closed form") {
        const Scenario s = s1();
        const LRQuantities lr = compute_lr(s);
        for (std::size_t k = 0; k < lr.size(); ++k) {
            const double t = s.grid.at(k);
            CHECK(std::abs(lr.theta[k] - (-0.05 * I1 * (1.0 - std::exp(-2.0 * I1 * t)))) < 1e-8);
        }
    }
    SUBCASE("fourth order") {
        auto err = [](long steps) {
            Scenario s = s1();
            s.grid = TimeGrid(0.0, 2.0, steps);
            const LRQuantities lr = compute_lr(s);
            return std::abs(lr.theta.back() - (-0.05 * I1 * (1.0 - std::exp(-4.0 * I1))));
        };
        CHECK(err(20) / err(40) == doctest::Approx(16.0).epsilon(0.1));
    }
    SUBCASE("u = 0 keeps theta at zero") {
        const LRQuantities lr = compute_lr(s1(0.0));
        for (const cd th : lr.theta) CHECK(th == cd(0.0, 0.0));
    }
}

TEST_CASE("LR phases") {
    const Scenario s = s1();
    const LRQuantities lr = compute_lr(s);
    const auto phi0 = lr_phase(s, lr, 0);
    // Φ_0(π) = −(0.01π − 0.005π).
    CHECK(phi0[index_of_pi(s)] == doctest::Approx(-0.005 * pi).epsilon(1e-8));
    for (int m = 0; m < 4; ++m) {
        const auto phi = lr_phase(s, lr, m);
        CHECK(phi[0] == 0.0);
        for (std::size_t k = 0; k < phi.size(); ++k) CHECK(std::abs(phi[k] - phi0[k] + 2.0 * m * lr.chi[k]) < 1e-10);
    }
    for (const cd y : lr.upsilon) CHECK(std::abs(std::abs(y) - 1.0) < 1e-10);
    CHECK_THROWS_AS(lr_phase(s, lr, static_cast<int>(s.trusted())), PreconditionFailed);
    SUBCASE("u = 0 and f = 0 give a vanishing phase") {
        const Scenario z = s1(0.0);
        const auto p = lr_phase(z, compute_lr(z), 0);
        for (double v : p) CHECK(v == 0.0);
    }
}

TEST_CASE("analytic evolution") {
    SUBCASE("U = I at t0") {
        const Scenario s = s1();
        const LRQuantities lr = compute_lr(s);
        CHECK((analytic_evolution(s, lr, 0).U - Operator::Identity(s.dim, s.dim)).norm() < 1e-14);
    }
    SUBCASE("kappa = 0: U|1> = e^{-2it}|1>, against propagation under 2 a^dag a") {
        const Scenario s = s1(0.0);
        const LRQuantities lr = compute_lr(s);
        GeneratorFn h;
        h.dim = s.dim;
        h.hermitian = true;
        const Operator n2 = 2.0 * number_operator(s.dim);
        h.eval = [n2](double) { return n2; };
        SolverOptions o = s.solver;
        o.substeps = 40;
        const auto st = propagate_state(h, basis_state(s.dim, 1), s.grid, o);
        for (std::size_t k = 0; k < lr.size(); k += 100)
            CHECK((analytic_evolution(s, lr, k).U * basis_state(s.dim, 1) - st.states[k]).norm() < 1e-7);
    }
    SUBCASE("S1 basis solutions against propagation under the closed-form h") {
        // Independent h(t) = 2[ω a†a + u a + u* a† + f] with u = −0.1i, f = 0.01 (hand values).
        auto worst = [](LrConvention conv) {
            Scenario s = s1();
            s.lr_convention = conv;
            const LRQuantities lr = compute_lr(s);
            const auto l = ladder_operators(s.dim);
            const cd u(0.0, -0.1);
            const double f = 0.01;
            const Operator hh = 2.0 * (number_operator(s.dim) + u * l.a + std::conj(u) * l.a_dagger +
                                       f * Operator::Identity(s.dim, s.dim));
            GeneratorFn h;
            h.dim = s.dim;
            h.eval = [hh](double) { return hh; };
            SolverOptions o = s.solver;
            o.substeps = 40;
            double w = 0.0;
            for (int m = 0; m < 3; ++m) {
                const auto st = propagate_state(h, basis_state(s.dim, m), s.grid, o);
                for (std::size_t k = 0; k < lr.size(); k += 50)
                    w = std::max(w, (analytic_evolution(s, lr, k).U * basis_state(s.dim, m) - st.states[k]).norm());
            }
            return w;
        };
        // Self-consistent θ equation and phase reproduce the numeric solution.
        CHECK(worst(LrConvention::SelfConsistent) <= 1e-6);
        // The published θ equation leaves an O(κ) mismatch.
        CHECK(worst(LrConvention::Published) > 1e-2);
    }
}

TEST_CASE("closed-form counterpart") {
    const Scenario s = s1();
    const LRQuantities lr = compute_lr(s);
    const Operator h = closed_form_counterpart(s, lr, 10);
    CHECK((h - h.adjoint()).norm() < 1e-12 * h.norm());
    const auto l = ladder_operators(s.dim);
    const Operator expect = 2.0 * (number_operator(s.dim) + cd(0.0, -0.1) * l.a + cd(0.0, 0.1) * l.a_dagger +
                                   0.01 * Operator::Identity(s.dim, s.dim));
    CHECK((h - expect).norm() < 1e-8);
}

TEST_CASE("quadratures") {
    SUBCASE("kappa = 0 at t0 returns the bare quadratures") {
        const Scenario s = s1(0.0);
        const LRQuantities lr = compute_lr(s);
        const auto q = quadrature_observables(s, lr, 0);
        const auto x = bare_quadratures(s.dim);
        CHECK((q.X1 - x[0]).norm() == 0.0);
        CHECK((q.X2 - x[1]).norm() == 0.0);
        CHECK_FALSE(q.discrepancy.has_value());
    }
    SUBCASE("chi = pi/2 rotates by 90 degrees") {
        Scenario s = s1(0.0);
        s.grid = TimeGrid(0.0, pi / 2, 100);
        const LRQuantities lr = compute_lr(s);
        const auto q = quadrature_observables(s, lr, 100);
        const auto x = bare_quadratures(s.dim);
        CHECK((q.X1 + x[1]).norm() < 1e-14);
        CHECK((q.X2 - x[0]).norm() < 1e-14);
    }
    SUBCASE("bare quadratures are Hermitian") {
        const auto x = bare_quadratures(6);
        CHECK((x[0] - x[0].adjoint()).norm() == 0.0);
        CHECK((x[1] - x[1].adjoint()).norm() < 1e-16);
    }
    SUBCASE("S1 at t = pi against direct conjugation") {
        const Scenario s = s1();
        const LRQuantities lr = compute_lr(s);
        const auto H = hamiltonian_generator(s);
        const auto tr = propagate_dyson(H, initial_dyson_map(s), s.grid, s.solver);
        const std::size_t k = index_of_pi(s);
        const auto q = quadrature_observables(s, lr, k, &tr.eta[k]);
        REQUIRE(q.discrepancy.has_value());
        CHECK(*q.discrepancy <= 1.0 * 0.1 * 0.1);
    }
}

TEST_CASE("matrix elements") {
    const Scenario s = s1();
    const LRQuantities lr = compute_lr(s);
    CHECK(std::abs(matrix_elements(s, lr, 0, 0, 0) - cd(0.01, 0.0)) < 1e-12);
    CHECK(matrix_elements(s, lr, 2, 0, 0) == cd(0.0, 0.0));
    CHECK(matrix_elements(s, lr, 0, 3, 500) == cd(0.0, 0.0));
    CHECK(std::abs(matrix_elements(s, lr, 1, 0, 0) - cd(0.0, 0.1)) < 1e-12);
    for (std::size_t k : {0ul, 137ul, 500ul, 1000ul})
        for (int m = 0; m < 4; ++m)
            for (int n = std::max(0, m - 1); n <= m + 1; ++n)
                CHECK(std::abs(matrix_elements(s, lr, m, n, k) - matrix_elements_numeric(s, lr, m, n, k)) < 1e-10);
    CHECK_THROWS_AS(matrix_elements(s, lr, static_cast<int>(s.trusted()), 0, 0), PreconditionFailed);
}

TEST_CASE("eigensystem") {
    SUBCASE("S1 energies") {
        const Scenario s = s1(0.1, 2);
        CHECK(std::abs(eigenvalue(s, 0, 0.0) - cd(0.02, 0.0)) < 1e-15);
        CHECK(std::abs(eigenvalue(s, 1, 0.0) - cd(2.02, 0.0)) < 1e-15);
        const LRQuantities lr = compute_lr(s);
        const EigenPair e = eigensystem(s, lr, 1, 300);
        CHECK(std::abs(e.energy - cd(2.02, 0.0)) < 1e-15);
        CHECK(e.residual <= 1e-3);
        CHECK(std::abs(e.zeta.norm() - 1.0) < 1e-10);
    }
    SUBCASE("kappa = 0 gives Fock states") {
        const Scenario s = s1(0.0, 2);
        const LRQuantities lr = compute_lr(s);
        for (int m = 0; m < 3; ++m) {
            const EigenPair e = eigensystem(s, lr, m, 40);
            CHECK(e.energy == cd(2.0 * m, 0.0));
            CHECK((e.zeta - basis_state(s.dim, m)).norm() < 1e-14);
        }
    }
    SUBCASE("residual shrinks at least like kappa^3") {
        auto r = [](double kappa) {
            const Scenario s = s1(kappa, 2);
            const LRQuantities lr = compute_lr(s);
            double w = 0.0;
            for (std::size_t k = 0; k < lr.size(); k += 100) w = std::max(w, eigensystem(s, lr, 0, k).residual);
            return w;
        };
        const double r1 = r(0.1), r3 = r(0.03), r01 = r(0.01);
        const double floor = 1e-12;
        CHECK(r1 <= 1e-3);
        CHECK(r3 <= std::max(floor, 1.5 * r1 * std::pow(0.3, 3)));
        CHECK(r01 <= std::max(floor, 1.5 * r1 * std::pow(0.1, 3)));
    }
    SUBCASE("preconditions") {
        const Scenario s1o = s1(0.1, 1);
        CHECK_THROWS_AS(eigensystem(s1o, compute_lr(s1o), 0, 0), PreconditionFailed);
        const Scenario s = s1(0.1, 2);
        CHECK_THROWS_AS(eigensystem(s, compute_lr(s), static_cast<int>(s.trusted()), 0), PreconditionFailed);
    }
}

TEST_CASE("PT analysis") {
    SUBCASE("S1 is symmetric and unbroken") {
        const PTReport r = pt_analysis(s1());
        CHECK(r.omega_even);
        CHECK(r.alpha_odd);
        CHECK(r.beta_odd);
        CHECK(r.symmetric);
        CHECK(r.phase == PTPhase::Unbroken);
        CHECK(r.max_im_energy_all <= 1e-12);
        CHECK(to_string(r.phase) == "UNBROKEN");
    }
    SUBCASE("S2 is broken with Im E_0 = -0.02") {
        const PTReport r = pt_analysis(s2());
        CHECK(r.phase == PTPhase::Broken);
        CHECK(r.max_im_energy[0] == doctest::Approx(0.02).epsilon(1e-12));
        CHECK(r.max_im_alpha_beta == doctest::Approx(1.0));
        CHECK(to_string(r.phase) == "BROKEN");
    }
    SUBCASE("label is invariant under alpha -> c alpha, beta -> beta / c") {
        for (const Scenario& s : {base(I1, I1, 0.1), s2(), base(cd(0.5, 0.3), cd(0.5, -0.3), 0.1)}) {
            const PTPhase ref = pt_analysis(s).phase;
            for (double c : {2.0, -0.5, 3.7, -1.0}) {
                Scenario v = s;
                v.alpha = s.alpha.scaled(c);
                v.beta = s.beta.scaled(1.0 / c);
                CHECK(pt_analysis(v).phase == ref);
            }
        }
    }
    SUBCASE("complex omega breaks the phase") {
        Scenario s = base(I1, I1, 0.1);
        s.omega = Coefficient::constant(cd(1.0, 0.1));
        CHECK(pt_analysis(s).phase == PTPhase::Broken);
    }
}
