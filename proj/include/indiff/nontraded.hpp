#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "indiff/black_scholes.hpp"
#include "indiff/hermite.hpp"
#include "indiff/operators.hpp"

namespace indiff {

/// Bounded payoff written on the non-traded factor Y.
struct PayoffY {
    enum class Kind { call_spread, custom };
    Kind kind = Kind::call_spread;
    double k1 = 0.0;
    double k2 = 0.0;
    std::function<double(double)> evaluator;
    double bound = 0.0;  ///< sup-norm of the payoff

    double operator()(double y) const { return evaluator(y); }

    static PayoffY call_spread(double k1, double k2) {
        if (!(k1 < k2)) throw ConfigError("call spread requires k1 < k2");
        PayoffY p;
        p.kind = Kind::call_spread;
        p.k1 = k1;
        p.k2 = k2;
        p.bound = k2 - k1;
        p.evaluator = [k1, k2](double y) { return std::max(y - k1, 0.0) - std::max(y - k2, 0.0); };
        return p;
    }

    /// `bound` must dominate |phi|; unbounded payoffs give an expected utility of minus infinity.
    static PayoffY custom(std::function<double(double)> f, double bound) {
        if (!f) throw ConfigError("custom payoff: evaluator missing");
        if (!(bound >= 0.0) || !std::isfinite(bound)) throw ConfigError("custom payoff: a finite bound is required");
        PayoffY p;
        p.kind = Kind::custom;
        p.evaluator = std::move(f);
        p.bound = bound;
        return p;
    }
};

/// theta(y) = exp(c0 + B y) on [lo, hi].
struct ExpPiece {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    double c0 = 0.0;
    double B = 0.0;
};

/// theta(y) = exp(-gamma_nu (1 - rho^2) phi(y)). When the payoff is a call spread the
/// exponent is piecewise linear and `pieces` is filled.
struct DistortedTerminal {
    std::function<double(double)> eval;
    std::vector<ExpPiece> pieces;
    double gamma_nu = 0.0;
    double rho = 0.0;

    double operator()(double y) const { return eval(y); }
    bool piecewise() const { return !pieces.empty(); }
};

inline DistortedTerminal distorted_terminal(const PayoffY& payoff, double gamma_nu, double rho) {
    if (!(std::abs(rho) < 1.0))
        throw ConfigError("distorted_terminal: rho^2 = 1 degenerates the transform; use the complete-market price");
    const double c = gamma_nu * (1.0 - rho * rho);
    DistortedTerminal d;
    d.gamma_nu = gamma_nu;
    d.rho = rho;
    if (c == 0.0) {
        d.eval = [](double) { return 1.0; };
        d.pieces = {ExpPiece{}};
        return d;
    }
    if (payoff.kind == PayoffY::Kind::call_spread) {
        const double k1 = payoff.k1, k2 = payoff.k2;
        const double inf = std::numeric_limits<double>::infinity();
        d.pieces = {ExpPiece{-inf, k1, 0.0, 0.0}, ExpPiece{k1, k2, c * k1, -c},
                    ExpPiece{k2, inf, -c * (k2 - k1), 0.0}};
    }
    PayoffY p = payoff;
    d.eval = [p, c](double y) { return std::exp(-c * p(y)); };
    return d;
}

/// theta identically 1 (the gamma_nu = 0 pipeline that yields eta).
inline DistortedTerminal unit_terminal(double rho) {
    return distorted_terminal(PayoffY::call_spread(0.0, 1.0), 0.0, rho);
}

namespace detail {

/// int_{wl}^{wh} He_k(w) phi(w) dw for k = 0..n.
inline std::vector<double> hermite_phi_integrals(int n, double wl, double wh) {
    std::vector<double> out(static_cast<std::size_t>(n + 1));
    out[0] = norm_cdf(wh) - norm_cdf(wl);
    auto edge = [](int k, double w) {
        if (std::isinf(w)) return 0.0;
        return hermite_he(k, w) * norm_pdf(w);
    };
    for (int k = 1; k <= n; ++k) out[static_cast<std::size_t>(k)] = edge(k - 1, wl) - edge(k - 1, wh);
    return out;
}

}  // namespace detail

/// E[theta(m + s Z) He_n(Z)] for n = 0..nmax, Z ~ N(0, 1).
/// Closed form per exponential piece when available, else trapezoid over +-8 standard deviations.
inline std::vector<double> gaussian_hermite_moments(const DistortedTerminal& theta, double m, double s, int nmax,
                                                    int trapezoid_nodes = 4096) {
    std::vector<double> out(static_cast<std::size_t>(nmax + 1), 0.0);
    if (theta.piecewise()) {
        for (const ExpPiece& pc : theta.pieces) {
            const double Bs = pc.B * s;
            const double zl = std::isinf(pc.lo) ? pc.lo : (pc.lo - m) / s;
            const double zh = std::isinf(pc.hi) ? pc.hi : (pc.hi - m) / s;
            const double wl = std::isinf(zl) ? zl : zl - Bs;
            const double wh = std::isinf(zh) ? zh : zh - Bs;
            const double scale = std::exp(pc.c0 + pc.B * m + 0.5 * Bs * Bs);
            const std::vector<double> I = detail::hermite_phi_integrals(nmax, wl, wh);
            // He_n(w + Bs) = sum_k C(n, k) He_k(w) (Bs)^{n-k}.
            for (int n = 0; n <= nmax; ++n) {
                double acc = 0.0, pw = 1.0;
                for (int k = n; k >= 0; --k) {
                    acc += detail::binom(n, k) * I[static_cast<std::size_t>(k)] * pw;
                    pw *= Bs;
                }
                out[static_cast<std::size_t>(n)] += scale * acc;
            }
        }
        return out;
    }
    const int N = trapezoid_nodes;
    const double h = 16.0 / N;
    for (int a = 0; a <= N; ++a) {
        const double z = -8.0 + a * h;
        const double w = (a == 0 || a == N ? 0.5 : 1.0) * h * norm_pdf(z) * theta(m + s * z);
        const std::vector<double> he = hermite_he_all(nmax, z);
        for (int n = 0; n <= nmax; ++n) out[static_cast<std::size_t>(n)] += w * he[static_cast<std::size_t>(n)];
    }
    return out;
}

/// Zeroth-order xi and its y-derivatives: d_y^n xi_0 = e^{-tau (1-rho^2) h0} s^{-n} E[theta(mu + s Z) He_n(Z)],
/// mu = y + f0 tau, s = sqrt(2 b0 tau).
inline std::vector<double> xi0_derivatives(const TaylorTable& tab, const DistortedTerminal& theta, double tau,
                                           double y, int nmax) {
    const double b0 = tab.at(Coeff::b, 0, 0);
    if (!(b0 > 0.0)) throw DomainError("xi expansion requires b_{0,0} > 0");
    const double w = tab.one_minus_rho2();
    const double kill = std::exp(-tau * w * tab.at(Coeff::h, 0, 0));
    const double s = std::sqrt(2.0 * b0 * tau);
    const double mu = y + tab.at(Coeff::f, 0, 0) * tau;
    std::vector<double> mom = gaussian_hermite_moments(theta, mu, s, nmax);
    double sp = 1.0;
    for (int n = 0; n <= nmax; ++n) {
        mom[static_cast<std::size_t>(n)] *= kill / sp;
        sp *= s;
    }
    return mom;
}

struct XiExpansion {
    double xi0 = 0.0;
    double xi1 = 0.0;
    double xi2 = 0.0;
    int order = 2;

    double bar(int m) const { return xi0 + (m >= 1 ? xi1 : 0.0) + (m >= 2 ? xi2 : 0.0); }
};

/// Operators of the linearised problem; time powers refer to tau.
struct XiOperators {
    WeylElement L1;
    WeylElement L2;
};

inline void require_y_only(const TaylorTable& tab) {
    for (Coeff c : {Coeff::b, Coeff::f, Coeff::h})
        for (auto [i, j] : {std::pair{1, 0}, std::pair{2, 0}, std::pair{1, 1}})
            if (tab.at(c, i, j) != 0.0)
                throw ConfigError(std::string("non-traded pricing requires y-only coefficients; ") + coeff_name(c) +
                                  "_{" + std::to_string(i) + "," + std::to_string(j) + "} is non-zero");
}

inline XiOperators xi_operators(const TaylorTable& tab) {
    require_y_only(tab);
    const double w = tab.one_minus_rho2();
    const WeylElement G1 = g_operator(1, tab, w);
    const WeylElement G2 = g_operator(2, tab, w);
    return {time_integral({G1}), time_integral({G2}) + time_integral({G1, G1})};
}

/// xi_0, xi_1, xi_2 at (t, y). Functions of y only, so x-derivatives vanish.
inline XiExpansion xi_expansion(const TaylorTable& tab, const XiOperators& ops, const DistortedTerminal& theta,
                                double t, double y, double T, int m = 2) {
    if (m < 0 || m > 2) throw ConfigError("xi_expansion: order must be 0, 1 or 2");
    const double tau = T - t;
    if (!(tau > 0.0)) throw ConfigError("xi_expansion: T must exceed t");
    const std::vector<double> d = xi0_derivatives(tab, theta, tau, y, WeylElement::kMaxDerivativeOrder);
    auto deriv = [&](int i, int j) { return i > 0 ? 0.0 : d[static_cast<std::size_t>(j)]; };
    const double dy = y - tab.ybar;
    XiExpansion x;
    x.order = m;
    x.xi0 = d[0];
    if (m >= 1) x.xi1 = ops.L1.apply(tau, 0.0, dy, deriv);
    if (m >= 2) x.xi2 = ops.L2.apply(tau, 0.0, dy, deriv);
    return x;
}

inline XiExpansion xi_expansion(const TaylorTable& tab, const DistortedTerminal& theta, double t, double y, double T,
                                int m = 2) {
    return xi_expansion(tab, xi_operators(tab), theta, t, y, T, m);
}

struct PsiTerms {
    double t0 = 0.0;
    double t1 = 0.0;
    double t2 = 0.0;

    double bar(int m) const { return t0 + (m >= 1 ? t1 : 0.0) + (m >= 2 ? t2 : 0.0); }
};

struct PsiExpansion {
    PsiTerms psi;
    PsiTerms eta;
    double gamma_nu = 0.0;

    double ubar(int m) const { return (eta.bar(m) - psi.bar(m)) / gamma_nu; }
};

/// psi_0 = log xi_0 / (1-rho^2), psi_1 = (xi_1/xi_0) / (1-rho^2), psi_2 = (xi_2/xi_0 - (xi_1/xi_0)^2 / 2) / (1-rho^2).
inline PsiTerms psi_from_xi(const XiExpansion& xi, double rho) {
    if (!(xi.xi0 > 0.0)) throw NumericError("psi expansion: xi_0 is not positive (quadrature breakdown)");
    const double w = 1.0 - rho * rho;
    const double r1 = xi.xi1 / xi.xi0, r2 = xi.xi2 / xi.xi0;
    return {std::log(xi.xi0) / w, r1 / w, (r2 - 0.5 * r1 * r1) / w};
}

inline PsiExpansion psi_expansion(const TaylorTable& tab, const XiOperators& ops, const PayoffY& payoff,
                                  double gamma_nu, double t, double y, double T, int m = 2) {
    PsiExpansion p;
    p.gamma_nu = gamma_nu;
    p.psi = psi_from_xi(xi_expansion(tab, ops, distorted_terminal(payoff, gamma_nu, tab.rho), t, y, T, m), tab.rho);
    p.eta = psi_from_xi(xi_expansion(tab, ops, unit_terminal(tab.rho), t, y, T, m), tab.rho);
    return p;
}

struct NontradedPrice {
    double ubar[3] = {0.0, 0.0, 0.0};
    PsiExpansion expansion;
};

/// u_bar_m = (eta_bar_m - psi_bar_m) / gamma_nu for a payoff on Y, expanded at ybar = y.
inline NontradedPrice nontraded_price(const LSVModel& model, const PayoffY& payoff, double gamma_nu, double t, double y,
                                      double T, int m = 2) {
    if (gamma_nu == 0.0) throw ConfigError("nontraded_price: gamma_nu must be non-zero");
    const TaylorTable tab = taylor_table(model, 0.0, y, m);
    const XiOperators ops = xi_operators(tab);
    NontradedPrice out;
    out.expansion = psi_expansion(tab, ops, payoff, gamma_nu, t, y, T, m);
    for (int k = 0; k <= 2; ++k) out.ubar[k] = out.expansion.ubar(std::min(k, m));
    return out;
}

}  // namespace indiff
