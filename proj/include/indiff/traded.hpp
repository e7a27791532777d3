#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "indiff/black_scholes.hpp"
#include "indiff/operators.hpp"
#include "indiff/quadrature.hpp"

namespace indiff {

/// European call with log-strike k, maturity T, valuation time t.
struct CallSpec {
    double k = 0.0;
    double T = 1.0;
    double t = 0.0;

    double tau() const { return T - t; }
    void validate() const {
        if (!std::isfinite(k)) throw ConfigError("call spec: log-strike must be finite");
        if (!(T > t)) throw ConfigError("call spec: maturity T must exceed valuation time t");
    }
};

/// gamma_nu > 0 is a buyer, gamma_nu < 0 a seller.
struct IndifferenceSetting {
    double gamma_nu = 0.0;
    double x = 0.0;
    double y = 0.0;
};

struct EtaExpansion {
    double eta0 = 0.0;
    double eta1 = 0.0;
    double eta2 = 0.0;

    double bar(int m) const { return eta0 + (m >= 1 ? eta1 : 0.0) + (m >= 2 ? eta2 : 0.0); }
};

struct PriceExpansion {
    double u0 = 0.0;
    double u1 = 0.0;
    double u2_lin = 0.0;
    double u2_ind = 0.0;
    /// Split of u2_ind: the part driven by d_y eta_1 and the part proportional to gamma_nu.
    double u2_ind_eta = 0.0;
    double u2_ind_gamma = 0.0;

    double ubar(int m) const { return u0 + (m >= 1 ? u1 : 0.0) + (m >= 2 ? u2_lin + u2_ind : 0.0); }
    /// Linear (minimal martingale measure) price approximation.
    double qbar(int m) const { return u0 + (m >= 1 ? u1 : 0.0) + (m >= 2 ? u2_lin : 0.0); }
};

/// Operators shared by all strikes for a fixed Taylor table. Time powers refer to tau.
struct TradedOperators {
    WeylElement H1;     ///< -eta_1 = H1 applied to 1
    WeylElement H2;     ///< eta_2 (without the closed cubic term) = -H2 applied to 1
    WeylElement U1;     ///< u_1 = U1 u_BS
    WeylElement U2;     ///< u_2^0 = U2 u_BS
    WeylElement Pind;   ///< double integral of (T - t1) d_y G_1(t, t2) over t1 <= t2
};

inline TradedOperators traded_operators(const TaylorTable& t) {
    TradedOperators ops;
    const WeylElement G1 = g_operator(1, t);
    const WeylElement G2 = g_operator(2, t);
    const WeylElement h1 = taylor_polynomial_operator(t, Coeff::h, 1);
    const WeylElement h2 = taylor_polynomial_operator(t, Coeff::h, 2);
    ops.H1 = time_integral({h1});
    ops.H2 = time_integral({G1, h1}) + time_integral({h2});
    ops.U1 = time_integral({G1});
    ops.U2 = time_integral({G2}) + time_integral({G1, G1});
    const WeylElement dyG1 = compose(WeylElement::dy(), G1);
    ops.Pind = time_integral({WeylElement::identity(), dyG1}).times_dt(1) - time_integral({WeylElement::dt(), dyG1});
    return ops;
}

inline EtaExpansion eta_terms(const TaylorTable& tab, const TradedOperators& ops, double t, double x, double y,
                              double T) {
    const double tau = T - t;
    if (!(tau > 0.0)) throw ConfigError("eta_terms: T must exceed t");
    const double dx = x - tab.xbar, dy = y - tab.ybar;
    EtaExpansion e;
    e.eta0 = -tau * tab.at(Coeff::h, 0, 0);
    e.eta1 = -ops.H1.apply_to_one(tau, dx, dy);
    const double h01 = tab.at(Coeff::h, 0, 1);
    e.eta2 = -ops.H2.apply_to_one(tau, dx, dy) +
             tau * tau * tau / 3.0 * tab.one_minus_rho2() * tab.at(Coeff::b, 0, 0) * h01 * h01;
    return e;
}

inline EtaExpansion eta_terms(const TaylorTable& tab, double t, double x, double y, double T) {
    return eta_terms(tab, traded_operators(tab), t, x, y, T);
}

/// J(z^2) / tau^2 where J = int_0^tau (tau-s)^{3/2} (tau+s)^{-1/2} exp(-L'^2 (tau-s) / (2 sigma0^2 tau (tau+s))) ds
/// and z^2 = L'^2 / (2 sigma0^2 tau). After s = tau (1 - w^2) the integrand is smooth on [0, 1].
inline double indifference_kernel_scaled(double z2, double tol = 1e-13) {
    auto f = [z2](double w) {
        const double w2 = w * w;
        const double r = 2.0 - w2;
        return 2.0 * w2 * w2 / std::sqrt(r) * std::exp(-z2 * w2 / r);
    };
    return integrate(f, 0.0, 1.0, tol, 1e-12);
}

/// The gamma_nu-proportional integral of the second-order indifference correction, in the form
///   a01^2 / (2 pi sigma0^2) int_t^T (T-t1)^{3/2} (T-t+t1-t)^{-1/2} e^{2k} exp(-((k-x) + sigma0^2 tau/2)^2 / (sigma0^2 (T-t+t1-t))) dt1.
/// Evaluated as a01^2/(2 pi sigma0^2) e^{2k} e^{-z^2} tau^2 J(z^2).
inline double indifference_gamma_integral(double a01, double sigma0, double x, double k, double tau) {
    if (a01 == 0.0) return 0.0;
    const double z = bs_hermite_argument(x, sigma0, k, tau);
    const double J = tau * tau * indifference_kernel_scaled(z * z);
    return a01 * a01 / (2.0 * std::numbers::pi * sigma0 * sigma0) * std::exp(2.0 * k - z * z) * J;
}

/// Applies an operator of the form Op' o (Dx^2 - Dx) (up to y-derivatives) to the call price u_BS(sigma0).
/// Only the part proportional to D = (Dx^2 - Dx) u_BS is evaluated: the Delta and price parts
/// cancel identically and are checked rather than summed, which keeps deep in/out-of-the-money
/// values accurate relative to D.
inline double apply_to_call(const WeylElement& op, double tau, double dx_bar, double dy_bar, double x, double sigma0,
                            double k) {
    const double D = bs_gamma_factor(x, sigma0, k, tau);
    const double z = bs_hermite_argument(x, sigma0, k, tau);
    const double s = -1.0 / (sigma0 * std::sqrt(2.0 * tau));
    // S_n = sum_{m <= n-2} s^m h_m(z), so that d_x^n u_BS = Delta + D S_n for n >= 2.
    double S[WeylElement::kMaxDerivativeOrder + 1] = {0.0, 0.0};
    {
        double hm = 0.0, h = 1.0, sp = 1.0, acc = 0.0;
        for (int n = 2; n <= WeylElement::kMaxDerivativeOrder; ++n) {
            const int m = n - 2;
            acc += sp * h;
            S[n] = acc;
            const double hn = 2.0 * z * h - 2.0 * m * hm;
            hm = h;
            h = hn;
            sp *= s;
        }
    }
    struct Group {
        double price = 0.0, delta = 0.0, scale = 0.0;
    };
    std::map<std::array<int, 3>, Group> groups;
    double acc = 0.0;
    for (const auto& [m, c] : op.terms()) {
        if (m.j > 0) continue;
        Group& g = groups[{m.r, m.p, m.q}];
        g.scale += std::abs(c);
        if (m.i == 0)
            g.price += c;
        else
            g.delta += c;
        if (m.i >= 2)
            acc += c * WeylElement::ipow(tau, m.r) * WeylElement::ipow(dx_bar, m.p) * WeylElement::ipow(dy_bar, m.q) *
                   S[m.i];
    }
    for (const auto& [key, g] : groups)
        if (std::abs(g.price) > 1e-10 * g.scale || std::abs(g.delta) > 1e-10 * g.scale)
            throw Error("apply_to_call: operator does not annihilate affine functions of e^x");
    return D * acc;
}

inline PriceExpansion u_terms(const TaylorTable& tab, const TradedOperators& ops, const CallSpec& spec,
                              const IndifferenceSetting& s) {
    spec.validate();
    tab.validate();
    const double tau = spec.tau();
    const double sigma0 = tab.sigma0();
    const double dx = s.x - tab.xbar, dy = s.y - tab.ybar;
    auto on_call = [&](const WeylElement& op) { return apply_to_call(op, tau, dx, dy, s.x, sigma0, spec.k); };

    PriceExpansion p;
    p.u0 = bs_call(spec.t, s.x, sigma0, spec.k, spec.T);
    p.u1 = on_call(ops.U1);
    p.u2_lin = on_call(ops.U2);

    const double pref = tab.one_minus_rho2() * tab.at(Coeff::b, 0, 0);
    if (pref != 0.0) {
        const double h01 = tab.at(Coeff::h, 0, 1);
        const double piece_eta = -h01 * on_call(ops.Pind);
        p.u2_ind_eta = pref * 2.0 * piece_eta;
        if (s.gamma_nu != 0.0)
            p.u2_ind_gamma =
                -s.gamma_nu * pref * indifference_gamma_integral(tab.at(Coeff::a, 0, 1), sigma0, s.x, spec.k, tau);
    }
    p.u2_ind = p.u2_ind_eta + p.u2_ind_gamma;
    return p;
}

inline PriceExpansion u_terms(const TaylorTable& tab, const CallSpec& spec, const IndifferenceSetting& s) {
    return u_terms(tab, traded_operators(tab), spec, s);
}

/// d_y u_1 at time t1 <= T: (T - t1) a01 (d_x^2 - d_x) u_0(t1).
inline double y_derivative_of_u1(const TaylorTable& tab, const CallSpec& spec, double t1, double x) {
    const double rem = spec.T - t1;
    const double a01 = tab.at(Coeff::a, 0, 1);
    if (rem <= 0.0 || a01 == 0.0) return 0.0;
    return rem * a01 * bs_gamma_factor(x, tab.sigma0(), spec.k, rem);
}

}  // namespace indiff
