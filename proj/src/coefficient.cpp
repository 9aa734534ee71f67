#include "dysonmap/coefficient.hpp"

#include <cmath>

namespace dysonmap {

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

cd Coefficient::operator()(double t) const {
    return std::visit(overloaded{
                          [](const Constant& c) { return c.value; },
                          [t](const Polynomial& p) {
                              cd acc{0.0, 0.0};
                              for (auto it = p.coeffs.rbegin(); it != p.coeffs.rend(); ++it) acc = acc * t + *it;
                              return acc;
                          },
                          [t](const Sinusoid& s) { return s.A * std::cos(s.nu * t) + s.B * std::sin(s.nu * t) + s.C; },
                          [t](const ExpRamp& e) { return e.c * std::exp(e.sigma * t); },
                      },
                      form_);
}

cd Coefficient::integral(double a, double b) const {
    return std::visit(
        overloaded{
            [&](const Constant& c) { return c.value * (b - a); },
            [&](const Polynomial& p) {
                cd acc{0.0, 0.0};
                for (std::size_t k = 0; k < p.coeffs.size(); ++k) {
                    const double e = static_cast<double>(k + 1);
                    acc += p.coeffs[k] * (std::pow(b, e) - std::pow(a, e)) / e;
                }
                return acc;
            },
            [&](const Sinusoid& s) {
                cd acc = s.C * (b - a);
                if (s.nu == 0.0) return acc + s.A * (b - a);
                acc += s.A * (std::sin(s.nu * b) - std::sin(s.nu * a)) / s.nu;
                acc -= s.B * (std::cos(s.nu * b) - std::cos(s.nu * a)) / s.nu;
                return acc;
            },
            [&](const ExpRamp& e) {
                if (e.sigma == 0.0) return e.c * (b - a);
                return e.c * (std::exp(e.sigma * b) - std::exp(e.sigma * a)) / e.sigma;
            },
        },
        form_);
}

Coefficient Coefficient::scaled(cd f) const {
    return std::visit(overloaded{
                          [f](const Constant& c) { return Coefficient(Constant{f * c.value}); },
                          [f](const Polynomial& p) {
                              Polynomial q = p;
                              for (auto& c : q.coeffs) c *= f;
                              return Coefficient(q);
                          },
                          [f](const Sinusoid& s) { return Coefficient(Sinusoid{f * s.A, f * s.B, f * s.C, s.nu}); },
                          [f](const ExpRamp& e) { return Coefficient(ExpRamp{f * e.c, e.sigma}); },
                      },
                      form_);
}

std::string Coefficient::form_name() const {
    return std::visit(overloaded{
                          [](const Constant&) { return std::string("constant"); },
                          [](const Polynomial&) { return std::string("polynomial"); },
                          [](const Sinusoid&) { return std::string("sinusoid"); },
                          [](const ExpRamp&) { return std::string("exp_ramp"); },
                      },
                      form_);
}

}  // namespace dysonmap
