#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dysonmap/errors.hpp"

namespace dysonmap {

/// Uniform samples t_k = t0 + k (t1 − t0)/steps, k = 0..steps.
struct TimeGrid {
    double t0 = 0.0;
    double t1 = 1.0;
    long steps = 1;

    TimeGrid() = default;
    TimeGrid(double t0_, double t1_, long steps_) : t0(t0_), t1(t1_), steps(steps_) { validate(); }

    void validate() const {
        if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0))
            throw PreconditionFailed("time grid needs finite t1 > t0");
        if (steps < 1) throw PreconditionFailed("time grid needs at least one step");
    }

    double dt() const { return (t1 - t0) / static_cast<double>(steps); }
    std::size_t size() const { return static_cast<std::size_t>(steps) + 1; }
    double at(std::size_t k) const {
        return k == static_cast<std::size_t>(steps) ? t1 : t0 + static_cast<double>(k) * dt();
    }

    /// Same interval with the spacing divided by `factor`.
    TimeGrid refined(long factor) const { return {t0, t1, steps * factor}; }

    /// Index of a grid point; throws if `t` is not on the grid.
    std::size_t index_of(double t) const {
        const double x = (t - t0) / dt();
        const double k = std::round(x);
        if (k < 0 || k > static_cast<double>(steps) || std::abs(x - k) > 1e-9)
            throw PreconditionFailed("t=" + std::to_string(t) + " is not a grid point");
        return static_cast<std::size_t>(k);
    }

    bool operator==(const TimeGrid& o) const { return t0 == o.t0 && t1 == o.t1 && steps == o.steps; }
};

/// One classical fourth-order Runge–Kutta step for y' = f(t, y).
template <typename T, typename F>
T rk4_step(const F& f, double t, const T& y, double h) {
    const T k1 = f(t, y);
    const T k2 = f(t + 0.5 * h, T(y + (0.5 * h) * k1));
    const T k3 = f(t + 0.5 * h, T(y + (0.5 * h) * k2));
    const T k4 = f(t + h, T(y + h * k3));
    return T(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

/// d/dt of uniformly sampled values: central differences inside, one-sided
/// second-order stencils at both ends. Needs at least three samples.
template <typename T>
std::vector<T> time_derivative(const std::vector<T>& y, double dt) {
    const std::size_t n = y.size();
    if (n < 3) throw PreconditionFailed("time_derivative needs at least three samples");
    std::vector<T> d;
    d.reserve(n);
    const double c = 1.0 / (2.0 * dt);
    d.push_back(T(c * (-3.0 * y[0] + 4.0 * y[1] - y[2])));
    for (std::size_t k = 1; k + 1 < n; ++k) d.push_back(T(c * (y[k + 1] - y[k - 1])));
    d.push_back(T(c * (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3])));
    return d;
}

/// Composite Simpson on samples f_0..f_{2m} with spacing h. Returns the
/// cumulative integrals at the even samples, starting with 0.
template <typename T>
std::vector<T> cumulative_simpson(const std::vector<T>& f, double h) {
    if (f.size() < 3 || f.size() % 2 == 0)
        throw PreconditionFailed("cumulative_simpson needs an odd number (>= 3) of samples");
    std::vector<T> out;
    out.reserve(f.size() / 2 + 1);
    T acc = T(0.0 * f[0]);
    out.push_back(acc);
    for (std::size_t k = 0; k + 2 < f.size(); k += 2) {
        acc = T(acc + (h / 3.0) * (f[k] + 4.0 * f[k + 1] + f[k + 2]));
        out.push_back(acc);
    }
    return out;
}

/// log2(coarse/fine): the observed order under a halving of the step.
inline double observed_order(double coarse, double fine) {
    if (!(coarse > 0.0) || !(fine > 0.0)) return std::nan("");
    return std::log2(coarse / fine);
}

}  // namespace dysonmap
