#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "indiff/operators.hpp"
#include "indiff/quadrature.hpp"

namespace indiff {

/// Transition kernel of the zeroth-order (constant coefficient) problem over an elapsed time s:
/// mean (x - a0 s, y + f0 s), covariance s [[2 a0, g0], [g0, 2 b0]].
struct GaussianKernelParams {
    double a0 = 0.0;
    double b0 = 0.0;
    double f0 = 0.0;
    double g0 = 0.0;
    double elapsed = 0.0;
    double xbar = 0.0;
    double ybar = 0.0;

    static GaussianKernelParams from_table(const TaylorTable& t, double elapsed) {
        return {t.at(Coeff::a, 0, 0), t.at(Coeff::b, 0, 0), t.at(Coeff::f, 0, 0), t.at(Coeff::g, 0, 0),
                elapsed,             t.xbar,                t.ybar};
    }

    void validate() const {
        if (!(elapsed > 0.0)) throw Error("Gaussian kernel: elapsed time must be > 0");
        const double det = 4.0 * a0 * b0 - g0 * g0;
        if (!(a0 > 0.0) || !(b0 >= 0.0) || det < -1e-15 * std::max(1.0, 4.0 * a0 * b0))
            throw Error("Gaussian kernel: covariance is not positive semi-definite");
    }

    Gaussian2 at(double x, double y) const {
        Gaussian2 g;
        g.mean = {x - a0 * elapsed, y + f0 * elapsed};
        g.c00 = 2.0 * a0 * elapsed;
        g.c01 = g0 * elapsed;
        g.c11 = 2.0 * b0 * elapsed;
        return g;
    }
};

using Function2 = std::function<double(double, double)>;
/// f(i, j, x, y) = d_x^i d_y^j f(x, y).
using DerivFunction2 = std::function<double(int, int, double, double)>;

/// (P0(t, t + s) f)(x, y) by adaptive Gauss-Hermite quadrature.
inline double semigroup_apply(const GaussianKernelParams& k, const Function2& f, double x, double y,
                              double tol = 1e-12) {
    k.validate();
    return gaussian_expectation([&](double u, double v) { return f(u, v); }, k.at(x, y), tol);
}

/// Polynomial in (x - xbar, y - ybar): (p, q) -> coefficient.
using Polynomial2 = std::map<std::pair<int, int>, double>;

/// Exact P0 of a polynomial through the moment property of the shift operators.
inline double semigroup_apply_polynomial(const GaussianKernelParams& k, const Polynomial2& poly, double x,
                                         double y) {
    k.validate();
    TaylorTable t;
    t.xbar = k.xbar;
    t.ybar = k.ybar;
    t.at(Coeff::a, 0, 0) = k.a0;
    t.at(Coeff::b, 0, 0) = k.b0;
    t.at(Coeff::f, 0, 0) = k.f0;
    t.at(Coeff::g, 0, 0) = k.g0;
    const WeylElement X = shift_operator_x_centered(t);
    const WeylElement Y = shift_operator_y_centered(t);
    WeylElement op;
    for (const auto& [pq, c] : poly) op += compose(power(X, pq.first), power(Y, pq.second)) * c;
    return op.apply_to_one(k.elapsed, x - k.xbar, y - k.ybar);
}

/// Value of A_n f at (x, y), where A_n is the order-n generator correction built from the table.
inline double apply_generator_term(int n, const TaylorTable& t, const DerivFunction2& f, double x, double y) {
    double acc = 0.0;
    const double dx = x - t.xbar, dy = y - t.ybar;
    for (Coeff c : {Coeff::a, Coeff::b, Coeff::f, Coeff::g}) {
        double coeff = 0.0;
        for (int k = 0; k <= n; ++k)
            coeff += t.at(c, n - k, k) * WeylElement::ipow(dx, n - k) * WeylElement::ipow(dy, k);
        if (coeff == 0.0) continue;
        double d = 0.0;
        switch (c) {
            case Coeff::a: d = f(2, 0, x, y) - f(1, 0, x, y); break;
            case Coeff::b: d = f(0, 2, x, y); break;
            case Coeff::f: d = f(0, 1, x, y); break;
            case Coeff::g: d = f(1, 1, x, y); break;
            default: break;
        }
        acc += coeff * d;
    }
    return acc;
}

/// sup over the given points of |P0 A_n f - G_n P0 f| for elapsed time s.
/// Derivatives of P0 f are taken under the integral, which the kernel's translation invariance allows.
inline double commutation_check(int n, const TaylorTable& t, const DerivFunction2& f, double elapsed,
                                const std::vector<std::pair<double, double>>& points, double tol = 1e-12) {
    const GaussianKernelParams k = GaussianKernelParams::from_table(t, elapsed);
    k.validate();
    const WeylElement G = g_operator(n, t);
    double worst = 0.0;
    for (const auto& [x, y] : points) {
        const double lhs = gaussian_expectation(
            [&](double u, double v) { return apply_generator_term(n, t, f, u, v); }, k.at(x, y), tol);
        const double rhs = G.apply(elapsed, x - t.xbar, y - t.ybar, [&](int i, int j) {
            return gaussian_expectation([&](double u, double v) { return f(i, j, u, v); }, k.at(x, y), tol);
        });
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace indiff
