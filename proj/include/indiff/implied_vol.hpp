#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "indiff/traded.hpp"

namespace indiff {

/// Implied-volatility expansion at log-moneyness L = k - x and time to maturity tau.
/// The per-coefficient pieces sigma_ij are only filled by the closed-form path.
struct IVExpansion {
    double sigma0 = 0.0;
    double tau = 0.0;
    double L = 0.0;
    double sigma_10 = 0.0;
    double sigma_01 = 0.0;
    double sigma_20 = 0.0;
    double sigma_11 = 0.0;
    double sigma_02 = 0.0;
    double sigma1 = 0.0;
    double sigma2_lin = 0.0;
    double sigma2_ind = 0.0;
    double sigma2_ind_eta = 0.0;    ///< part driven by (lambda^2/2)_{0,1}
    double sigma2_ind_gamma = 0.0;  ///< part proportional to gamma_nu
    bool has_components = false;

    double sigma2() const { return sigma2_lin + sigma2_ind; }
    double ivbar(int m) const { return sigma0 + (m >= 1 ? sigma1 : 0.0) + (m >= 2 ? sigma2() : 0.0); }
};

/// Gamma_nu-proportional second-order vol term divided by gamma_nu; equals the corresponding
/// price term divided by vega exactly, because both use the same kernel.
inline double sigma2_ind_gamma_unit(const TaylorTable& tab, double x, double k, double tau) {
    const double a01 = tab.at(Coeff::a, 0, 1);
    const double pref = tab.one_minus_rho2() * tab.at(Coeff::b, 0, 0);
    if (a01 == 0.0 || pref == 0.0) return 0.0;
    const double s0 = tab.sigma0();
    const double z = bs_hermite_argument(x, s0, k, tau);
    const double J = tau * tau * indifference_kernel_scaled(z * z);
    return -pref * a01 * a01 * std::exp(k) * J / (s0 * s0 * std::sqrt(2.0 * std::numbers::pi) * std::sqrt(tau));
}

/// Closed-form implied-vol coefficients. Requires the expansion point to equal (x, y).
inline IVExpansion iv_terms_closed_form(const TaylorTable& tab, const CallSpec& spec, const IndifferenceSetting& s) {
    spec.validate();
    tab.validate();
    if (std::abs(tab.xbar - s.x) > 1e-14 * (1.0 + std::abs(s.x)) ||
        std::abs(tab.ybar - s.y) > 1e-14 * (1.0 + std::abs(s.y)))
        throw ConfigError("iv_terms_closed_form: expansion point must equal the current state (x, y)");

    const double s0 = tab.sigma0();
    const double s2 = s0 * s0, s3 = s2 * s0, s5 = s3 * s2, s7 = s5 * s2;
    const double tau = spec.tau(), tau2 = tau * tau;
    const double L = spec.k - s.x, L2 = L * L;
    auto A = [&](int i, int j) { return tab.at(Coeff::a, i, j); };
    auto B = [&](int i, int j) { return tab.at(Coeff::b, i, j); };
    auto F = [&](int i, int j) { return tab.at(Coeff::f, i, j); };
    auto G = [&](int i, int j) { return tab.at(Coeff::g, i, j); };
    // The polynomials below take the second-order a entries as second derivatives of a,
    // i.e. twice the normalised Taylor entries stored in the table.
    const double a10 = A(1, 0), a01 = A(0, 1), a20 = 2.0 * A(2, 0), a11 = 2.0 * A(1, 1), a02 = 2.0 * A(0, 2);
    const double b0 = B(0, 0), f0 = F(0, 0), g0 = G(0, 0);
    const double f10 = F(1, 0), f01 = F(0, 1), g10 = G(1, 0), g01 = G(0, 1);

    IVExpansion e;
    e.has_components = true;
    e.sigma0 = s0;
    e.tau = tau;
    e.L = L;
    e.sigma_10 = a10 * L / (2.0 * s0);
    e.sigma_01 = tau * a01 * (g0 + 2.0 * f0) / (4.0 * s0) + a01 * g0 * L / (2.0 * s3);
    e.sigma_20 = tau * (s0 * a20 / 12.0 - a10 * a10 / (8.0 * s0)) - tau2 * s0 * a10 * a10 / 96.0 +
                 (2.0 * s2 * a20 - 3.0 * a10 * a10) * L2 / (12.0 * s3);
    e.sigma_11 = tau / (12.0 * s3) * (s2 * a11 * g0 + a01 * (a10 * g0 - 2.0 * s2 * g10)) -
                 tau2 * a01 * a10 * g0 / (48.0 * s0) +
                 tau / (24.0 * s3) *
                     (2.0 * s2 * a11 * (g0 + 2.0 * f0) +
                      a01 * (2.0 * s2 * (g10 + 2.0 * f10) - 5.0 * a10 * (g0 + 2.0 * f0))) *
                     L +
                 (s2 * a11 * g0 + a01 * (s2 * g10 - 5.0 * a10 * g0)) * L2 / (6.0 * s5);
    e.sigma_02 =
        tau / (24.0 * s5) *
            (4.0 * s2 * a02 * (3.0 * s2 * b0 - g0 * g0) + a01 * (a01 * (9.0 * g0 * g0 - 8.0 * s2 * b0) - 4.0 * s2 * g0 * g01)) +
        tau2 / (24.0 * s3) *
            (a01 * (-2.0 * s2 * a01 * b0 + g0 * (s2 * (g01 + 2.0 * f01) - 3.0 * a01 * f0)) +
             a01 * f0 * (2.0 * s2 * (g01 + 2.0 * f01) - 3.0 * a01 * f0) + s2 * a02 * (g0 + 2.0 * f0) * (g0 + 2.0 * f0)) +
        tau / (24.0 * s5) *
            (a01 * (g0 * (4.0 * s2 * (g01 + f01) - 18.0 * a01 * f0) - 9.0 * a01 * g0 * g0 + 4.0 * s2 * g01 * f0) +
             4.0 * s2 * a02 * g0 * (g0 + 2.0 * f0)) *
            L +
        (a01 * (a01 * (4.0 * s2 * b0 - 9.0 * g0 * g0) + 2.0 * s2 * g0 * g01) + 2.0 * s2 * a02 * g0 * g0) * L2 /
            (12.0 * s7);

    const double pref = tab.one_minus_rho2() * b0;
    e.sigma2_ind_eta = pref * (-2.0 * tab.at(Coeff::h, 0, 1) * a01 * tau2 / (3.0 * s0));
    e.sigma2_ind_gamma = s.gamma_nu * sigma2_ind_gamma_unit(tab, s.x, spec.k, tau);
    e.sigma2_ind = e.sigma2_ind_eta + e.sigma2_ind_gamma;
    e.sigma1 = e.sigma_10 + e.sigma_01;
    e.sigma2_lin = e.sigma_20 + e.sigma_11 + e.sigma_02;
    return e;
}

/// Price-to-vol recursion: Sigma_1 = u_1 / vega, Sigma_2 = (u_2 - Sigma_1^2 volga / 2) / vega.
inline IVExpansion iv_terms_generic(const PriceExpansion& p, double sigma0, const CallSpec& spec, double x) {
    spec.validate();
    const double tau = spec.tau();
    const double vega = bs_vega(spec.t, x, sigma0, spec.k, spec.T);
    if (!(vega > 0.0) || !std::isfinite(vega))
        throw NumericError("iv_terms_generic: vega vanishes at this (tau, L); use the closed-form path");
    const double volga_ratio = bs_volga_over_vega(spec.t, x, sigma0, spec.k, spec.T);
    IVExpansion e;
    e.sigma0 = sigma0;
    e.tau = tau;
    e.L = spec.k - x;
    e.sigma1 = p.u1 / vega;
    e.sigma2_lin = p.u2_lin / vega - 0.5 * e.sigma1 * e.sigma1 * volga_ratio;
    e.sigma2_ind_eta = p.u2_ind_eta / vega;
    e.sigma2_ind_gamma = p.u2_ind_gamma / vega;
    e.sigma2_ind = p.u2_ind / vega;
    if (!std::isfinite(e.sigma1) || !std::isfinite(e.sigma2_lin) || !std::isfinite(e.sigma2_ind))
        throw NumericError("iv_terms_generic: non-finite vol term; use the closed-form path");
    return e;
}

enum class Side { buyer, seller };

inline const char* side_name(Side s) { return s == Side::buyer ? "buyer" : "seller"; }

/// gamma_nu with the sign convention of the side: buyers positive, sellers negative.
inline double signed_gamma_nu(double gamma_nu_abs, Side s) {
    return s == Side::buyer ? std::abs(gamma_nu_abs) : -std::abs(gamma_nu_abs);
}

struct SurfaceRow {
    double k = 0.0;
    double T = 0.0;
    Side side = Side::buyer;
    IVExpansion iv;
    double half_spread = 0.0;  ///< |Sigma_2^Ind gamma part| at |gamma_nu|
    std::string error;         ///< non-empty when this point failed
};

/// Implied-vol surface over strikes x maturities for one side. Each row re-expands at (x, y).
inline std::vector<SurfaceRow> surface(const LSVModel& model, const IndifferenceSetting& s,
                                       const std::vector<double>& strikes, const std::vector<double>& maturities,
                                       Side side, double t = 0.0) {
    const TaylorTable tab = taylor_table(model, s.x, s.y, 2);
    IndifferenceSetting signed_s = s;
    signed_s.gamma_nu = signed_gamma_nu(s.gamma_nu, side);
    std::vector<SurfaceRow> rows;
    rows.reserve(strikes.size() * maturities.size());
    for (double T : maturities)
        for (double k : strikes) {
            SurfaceRow r;
            r.k = k;
            r.T = T;
            r.side = side;
            try {
                r.iv = iv_terms_closed_form(tab, CallSpec{k, T, t}, signed_s);
                r.half_spread = std::abs(r.iv.sigma2_ind_gamma);
            } catch (const Error& ex) {
                r.error = ex.what();
            }
            rows.push_back(r);
        }
    return rows;
}

}  // namespace indiff
