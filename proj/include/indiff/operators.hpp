#pragma once

#include "indiff/model.hpp"
#include "indiff/weyl.hpp"

namespace indiff {

/// (X(t,t1) - xbar) = (x - xbar) + dt (-a0 + 2 a0 Dx + g0 Dy).
inline WeylElement shift_operator_x_centered(const TaylorTable& t) {
    const double a0 = t.at(Coeff::a, 0, 0);
    const double g0 = t.at(Coeff::g, 0, 0);
    WeylElement w = WeylElement::xpoly();
    w.add_term({1, 0, 0, 0, 0}, -a0);
    w.add_term({1, 0, 0, 1, 0}, 2.0 * a0);
    w.add_term({1, 0, 0, 0, 1}, g0);
    return w;
}

/// (Y(t,t1) - ybar) = (y - ybar) + dt (f0 + 2 b0 Dy + g0 Dx).
inline WeylElement shift_operator_y_centered(const TaylorTable& t) {
    const double b0 = t.at(Coeff::b, 0, 0);
    const double f0 = t.at(Coeff::f, 0, 0);
    const double g0 = t.at(Coeff::g, 0, 0);
    WeylElement w = WeylElement::ypoly();
    w.add_term({1, 0, 0, 0, 0}, f0);
    w.add_term({1, 0, 0, 0, 1}, 2.0 * b0);
    w.add_term({1, 0, 0, 1, 0}, g0);
    return w;
}

/// X(t,t1) itself, including the constant xbar.
inline WeylElement shift_operator_x(const TaylorTable& t) {
    return shift_operator_x_centered(t) + WeylElement::scalar(t.xbar);
}

/// Y(t,t1) itself, including the constant ybar.
inline WeylElement shift_operator_y(const TaylorTable& t) {
    return shift_operator_y_centered(t) + WeylElement::scalar(t.ybar);
}

/// Differential part multiplying each grouped coefficient in the generator.
inline WeylElement coefficient_operator(Coeff c) {
    switch (c) {
        case Coeff::a: return WeylElement::monomial(1.0, {0, 0, 0, 2, 0}) - WeylElement::dx();
        case Coeff::b: return WeylElement::monomial(1.0, {0, 0, 0, 0, 2});
        case Coeff::f: return WeylElement::dy();
        case Coeff::g: return WeylElement::monomial(1.0, {0, 0, 0, 1, 1});
        case Coeff::h: return WeylElement::identity();
    }
    return {};
}

/// chi_n(X, Y) = sum_k chi_{n-k,k} (X - xbar)^{n-k} (Y - ybar)^k, as an operator.
inline WeylElement taylor_polynomial_operator(const TaylorTable& t, Coeff c, int n) {
    const WeylElement X = shift_operator_x_centered(t);
    const WeylElement Y = shift_operator_y_centered(t);
    WeylElement out;
    for (int k = 0; k <= n; ++k) {
        const double v = t.at(c, n - k, k);
        if (v == 0.0) continue;
        out += compose(power(X, n - k), power(Y, k)) * v;
    }
    return out;
}

/// G_n(t,t1) = A_n(X(t,t1), Y(t,t1)) - w * h_n(X(t,t1), Y(t,t1)).
///
/// w = 0 gives the traded-branch operator; w = 1 - rho^2 gives the
/// operator of the linearised non-traded problem.
inline WeylElement g_operator(int n, const TaylorTable& t, double potential_weight = 0.0) {
    if (n < 1 || n > 2) throw Error("g_operator: n must be 1 or 2");
    WeylElement out;
    for (Coeff c : {Coeff::a, Coeff::b, Coeff::f, Coeff::g}) {
        const WeylElement poly = taylor_polynomial_operator(t, c, n);
        if (poly.is_zero()) continue;
        out += compose(poly, coefficient_operator(c));
    }
    if (potential_weight != 0.0) out -= taylor_polynomial_operator(t, Coeff::h, n) * potential_weight;
    return out;
}

}  // namespace indiff
