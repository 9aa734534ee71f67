#pragma once

// Dense operator algebra on a truncated bosonic Fock space {|0>, ..., |dim-1>}.
// Everything here is a free function over Eigen dense types, templated on the
// complex scalar so the same code serves double and long double builds.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "dysonmap/errors.hpp"

namespace dysonmap {

using Index = Eigen::Index;
using cd = std::complex<double>;

template <typename Scalar = cd>
using OperatorT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar = cd>
using StateT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Operator = OperatorT<cd>;
using State = StateT<cd>;

inline void require_dim(Index dim) {
    if (dim < 2) {
        throw InvalidDimension("Fock truncation must be at least 2, got " + std::to_string(dim));
    }
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(std::real(m(i, j))) || !std::isfinite(std::imag(m(i, j)))) return false;
    return true;
}

template <typename Scalar = cd>
struct Ladder {
    OperatorT<Scalar> a;
    OperatorT<Scalar> a_dagger;
};

/// a|n> = sqrt(n)|n-1>, truncated at `dim` levels.
template <typename Scalar = cd>
Ladder<Scalar> ladder_operators(Index dim) {
    require_dim(dim);
    using Real = typename Eigen::NumTraits<Scalar>::Real;
    OperatorT<Scalar> a = OperatorT<Scalar>::Zero(dim, dim);
    for (Index n = 1; n < dim; ++n) a(n - 1, n) = Scalar(std::sqrt(Real(n)));
    OperatorT<Scalar> ad = a.adjoint();
    return {std::move(a), std::move(ad)};
}

template <typename Scalar = cd>
OperatorT<Scalar> number_operator(Index dim) {
    require_dim(dim);
    using Real = typename Eigen::NumTraits<Scalar>::Real;
    OperatorT<Scalar> n = OperatorT<Scalar>::Zero(dim, dim);
    for (Index k = 0; k < dim; ++k) n(k, k) = Scalar(Real(k));
    return n;
}

template <typename Scalar = cd>
StateT<Scalar> basis_state(Index dim, Index n) {
    require_dim(dim);
    if (n < 0 || n >= dim) throw InvalidDimension("basis index " + std::to_string(n) + " outside truncation");
    StateT<Scalar> v = StateT<Scalar>::Zero(dim);
    v(n) = Scalar(1);
    return v;
}

/// Leading n×n block: the part of an operator not contaminated by truncation.
template <typename Derived>
auto leading_block(const Eigen::MatrixBase<Derived>& m, Index n) {
    return m.topLeftCorner(n, n);
}

/// Induced 1-norm (max column sum).
template <typename Derived>
double norm1(const Eigen::MatrixBase<Derived>& m) {
    if (m.size() == 0) return 0.0;
    return static_cast<double>(m.cwiseAbs().colwise().sum().maxCoeff());
}

// ---------------------------------------------------------------------------
// Matrix exponential: scaling and squaring with diagonal Padé approximants
// (degrees 3, 5, 7, 9, 13), Higham's thresholds for double precision.
// ---------------------------------------------------------------------------

struct ExpmOptions {
    /// Upper bound on the number of squarings; exceeding it is a range error.
    int max_squarings = 60;
};

namespace detail {

template <typename Mat>
void pade_terms(const Mat& A, int degree, Mat& U, Mat& V) {
    using Scalar = typename Mat::Scalar;
    using Real = typename Eigen::NumTraits<Scalar>::Real;
    const Index n = A.rows();
    const Mat I = Mat::Identity(n, n);
    const Mat A2 = A * A;
    switch (degree) {
        case 3: {
            const Real b[] = {120, 60, 12, 1};
            U.noalias() = A * (b[3] * A2 + b[1] * I);
            V = b[2] * A2 + b[0] * I;
            return;
        }
        case 5: {
            const Real b[] = {30240, 15120, 3360, 420, 30, 1};
            const Mat A4 = A2 * A2;
            U.noalias() = A * (b[5] * A4 + b[3] * A2 + b[1] * I);
            V = b[4] * A4 + b[2] * A2 + b[0] * I;
            return;
        }
        case 7: {
            const Real b[] = {17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1};
            const Mat A4 = A2 * A2;
            const Mat A6 = A4 * A2;
            U.noalias() = A * (b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
            V = b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
            return;
        }
        case 9: {
            const Real b[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                              2162160.,     110880.,     3960.,       90.,        1.};
            const Mat A4 = A2 * A2;
            const Mat A6 = A4 * A2;
            const Mat A8 = A6 * A2;
            U.noalias() = A * (b[9] * A8 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
            V = b[8] * A8 + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
            return;
        }
        default: {
            const Real b[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                              1187353796428800.,  129060195264000.,   10559470521600.,
                              670442572800.,      33522128640.,       1323241920.,
                              40840800.,          960960.,            16380.,
                              182.,               1.};
            const Mat A4 = A2 * A2;
            const Mat A6 = A4 * A2;
            Mat inner = b[13] * A6 + b[11] * A4 + b[9] * A2;
            U.noalias() = A * (A6 * inner + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
            inner = b[12] * A6 + b[10] * A4 + b[8] * A2;
            V.noalias() = A6 * inner;
            V += b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
            return;
        }
    }
}

}  // namespace detail

/// exp(M) for a general (non-normal) square matrix.
template <typename Derived>
typename Derived::PlainObject matrix_exponential(const Eigen::MatrixBase<Derived>& M,
                                                 const ExpmOptions& opts = {}) {
    using Mat = typename Derived::PlainObject;
    if (M.rows() != M.cols()) throw InvalidDimension("matrix_exponential needs a square matrix");
    if (!all_finite(M)) throw RangeError("matrix_exponential: non-finite input");
    const Index n = M.rows();
    if (n == 0) return Mat(0, 0);

    static constexpr double theta[] = {1.495585217958292e-2, 2.539398330063230e-1,
                                       9.504178996162932e-1, 2.097847961257068e0,
                                       5.371920351148152e0};
    static constexpr int degrees[] = {3, 5, 7, 9, 13};

    const double l1 = norm1(M);
    Mat A = M;
    int degree = 13;
    int squarings = 0;
    for (int k = 0; k < 4; ++k) {
        if (l1 <= theta[k]) {
            degree = degrees[k];
            break;
        }
    }
    if (degree == 13 && l1 > theta[4]) {
        squarings = static_cast<int>(std::ceil(std::log2(l1 / theta[4])));
        if (squarings > opts.max_squarings) {
            throw RangeError("matrix_exponential: norm " + std::to_string(l1) + " needs " +
                             std::to_string(squarings) + " squarings (limit " +
                             std::to_string(opts.max_squarings) + ")");
        }
        A /= std::ldexp(1.0, squarings);
    }

    Mat U(n, n), V(n, n);
    detail::pade_terms(A, degree, U, V);
    Mat result = (V - U).partialPivLu().solve(V + U);
    for (int s = 0; s < squarings; ++s) result = (result * result).eval();
    if (!all_finite(result)) throw RangeError("matrix_exponential overflowed");
    return result;
}

/// D[θ] = exp(θ a† − θ* a).
template <typename Scalar = cd>
OperatorT<Scalar> displacement(Scalar theta, Index dim) {
    require_dim(dim);
    if (!std::isfinite(std::real(theta)) || !std::isfinite(std::imag(theta)))
        throw RangeError("displacement: non-finite amplitude");
    const auto l = ladder_operators<Scalar>(dim);
    OperatorT<Scalar> gen = theta * l.a_dagger - std::conj(theta) * l.a;
    return matrix_exponential(gen);
}

/// R[χ] = exp(−2iχ a†a), diagonal in the Fock basis.
template <typename Scalar = cd>
OperatorT<Scalar> rotation(typename Scalar::value_type angle, Index dim) {
    require_dim(dim);
    using Real = typename Eigen::NumTraits<Scalar>::Real;
    OperatorT<Scalar> r = OperatorT<Scalar>::Zero(dim, dim);
    for (Index k = 0; k < dim; ++k) r(k, k) = std::polar(Real(1), Real(-2) * angle * Real(k));
    return r;
}

// ---------------------------------------------------------------------------
// Linear solves with a condition estimate.
// ---------------------------------------------------------------------------

inline constexpr double kRcondFloor = 1e-12;

template <typename T>
struct Solved {
    T value;
    double rcond;
};

/// M⁻¹X through a partially pivoted LU factorization. Throws IllConditioned
/// when the reciprocal condition estimate drops below `rcond_floor`; `time`
/// is carried into the error for trajectory callers.
template <typename DerivedM, typename DerivedX>
Solved<typename DerivedX::PlainObject> invert_apply(const Eigen::MatrixBase<DerivedM>& M,
                                                    const Eigen::MatrixBase<DerivedX>& X,
                                                    double rcond_floor = kRcondFloor,
                                                    double time = std::numeric_limits<double>::quiet_NaN()) {
    if (M.rows() != M.cols()) throw InvalidDimension("invert_apply: matrix not square");
    if (M.cols() != X.rows()) throw InvalidDimension("invert_apply: dimension mismatch");
    const Eigen::PartialPivLU<typename DerivedM::PlainObject> lu(M);
    // The estimator is unreliable for exactly singular input, so zero pivots count as rcond 0.
    const bool zero_pivot = (lu.matrixLU().diagonal().array().abs() == 0).any();
    const double rc = zero_pivot ? 0.0 : static_cast<double>(lu.rcond());
    if (!(rc >= rcond_floor)) {
        std::string msg = "invert_apply: reciprocal condition " + std::to_string(rc) + " below floor";
        if (!std::isnan(time)) msg += " at t=" + std::to_string(time);
        throw IllConditioned(msg, rc, time);
    }
    return {lu.solve(X), rc};
}

/// Fraction of the squared norm carried by the top `guard` levels.
template <typename Derived>
double tail_mass(const Eigen::MatrixBase<Derived>& v, Index guard) {
    const Index dim = v.size();
    if (guard < 1 || guard >= dim)
        throw InvalidDimension("tail_mass: guard " + std::to_string(guard) + " must be in [1, dim)");
    const double total = static_cast<double>(v.squaredNorm());
    if (!(total > 0.0)) throw UndefinedNorm("tail_mass of a zero vector");
    return static_cast<double>(v.tail(guard).squaredNorm()) / total;
}

/// [A, B] = AB − BA.
template <typename DA, typename DB>
typename DA::PlainObject commutator(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B) {
    return A * B - B * A;
}

}  // namespace dysonmap
