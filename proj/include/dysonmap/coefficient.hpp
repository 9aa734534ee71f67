#pragma once

#include <complex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dysonmap {

using cd = std::complex<double>;

/// Closed-form complex time function used for ω(t), α(t), β(t).
class Coefficient {
public:
    struct Constant {
        cd value;
    };
    /// Σ_p c_p t^p
    struct Polynomial {
        std::vector<cd> coeffs;
    };
    /// A cos(νt) + B sin(νt) + C
    struct Sinusoid {
        cd A, B, C;
        double nu = 1.0;
    };
    /// c e^{σt}
    struct ExpRamp {
        cd c;
        double sigma = 0.0;
    };
    using Form = std::variant<Constant, Polynomial, Sinusoid, ExpRamp>;

    Coefficient() : form_(Constant{cd{0.0, 0.0}}) {}
    Coefficient(Form f) : form_(std::move(f)) {}  // NOLINT(google-explicit-constructor)

    static Coefficient constant(cd v) { return Coefficient(Constant{v}); }
    static Coefficient polynomial(std::vector<cd> c) { return Coefficient(Polynomial{std::move(c)}); }
    static Coefficient sinusoid(cd A, cd B, cd C, double nu) { return Coefficient(Sinusoid{A, B, C, nu}); }
    static Coefficient exp_ramp(cd c, double sigma) { return Coefficient(ExpRamp{c, sigma}); }

    cd operator()(double t) const;

    /// ∫_a^b of the function, in closed form.
    cd integral(double a, double b) const;

    /// Multiply by a constant (keeps the form).
    Coefficient scaled(cd factor) const;

    const Form& form() const { return form_; }
    std::string form_name() const;

private:
    Form form_;
};

}  // namespace dysonmap
