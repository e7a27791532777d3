#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "indiff/error.hpp"

namespace indiff {

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }
inline double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// Black-Scholes call in log variables (zero rates): e^x Phi(d+) - e^k Phi(d-).
/// sigma <= 0 returns the intrinsic value.
inline double bs_call(double t, double x, double sigma, double k, double T) {
    const double tau = T - t;
    if (!(tau > 0.0)) throw Error("bs_call: maturity must exceed valuation time");
    if (!(sigma > 0.0)) return std::max(std::exp(x) - std::exp(k), 0.0);
    const double sd = sigma * std::sqrt(tau);
    const double dp = (x - k) / sd + 0.5 * sd;
    const double dm = dp - sd;
    return std::exp(x) * norm_cdf(dp) - std::exp(k) * norm_cdf(dm);
}

/// (d_x^2 - d_x) u_BS = e^k phi(d-) / (sigma sqrt(tau)).
inline double bs_gamma_factor(double x, double sigma, double k, double tau) {
    const double sd = sigma * std::sqrt(tau);
    const double dm = (x - k) / sd - 0.5 * sd;
    return std::exp(k) * norm_pdf(dm) / sd;
}

/// z = (x - k - sigma^2 tau / 2) / (sigma sqrt(2 tau)).
inline double bs_hermite_argument(double x, double sigma, double k, double tau) {
    return (x - k - 0.5 * sigma * sigma * tau) / (sigma * std::sqrt(2.0 * tau));
}

/// d_sigma u_BS.
inline double bs_vega(double t, double x, double sigma, double k, double T) {
    const double tau = T - t;
    return sigma * tau * bs_gamma_factor(x, sigma, k, tau);
}

/// d_sigma^2 u_BS / d_sigma u_BS = (k - x)^2 / (sigma^3 tau) - sigma tau / 4.
inline double bs_volga_over_vega(double t, double x, double sigma, double k, double T) {
    const double tau = T - t;
    const double L = k - x;
    return L * L / (sigma * sigma * sigma * tau) - sigma * tau / 4.0;
}

inline double bs_volga(double t, double x, double sigma, double k, double T) {
    return bs_vega(t, x, sigma, k, T) * bs_volga_over_vega(t, x, sigma, k, T);
}

/// n-th x-derivative of u_BS. For n >= 2 uses d_x^n u = Delta + sum_{m <= n-2} d_x^m D with
/// D = (d_x^2 - d_x) u and d_x^m D = D (-1/(sigma sqrt(2 tau)))^m h_m(z).
inline double bs_x_derivative(int n, double x, double sigma, double k, double tau) {
    if (n < 0) throw Error("bs_x_derivative: negative order");
    const double sd = sigma * std::sqrt(tau);
    const double dp = (x - k) / sd + 0.5 * sd;
    if (n == 0) return std::exp(x) * norm_cdf(dp) - std::exp(k) * norm_cdf(dp - sd);
    const double delta = std::exp(x) * norm_cdf(dp);
    if (n == 1) return delta;
    const double D = bs_gamma_factor(x, sigma, k, tau);
    const double z = bs_hermite_argument(x, sigma, k, tau);
    const double s = -1.0 / (sigma * std::sqrt(2.0 * tau));
    // Physicists' Hermite recursion, accumulated alongside the powers of s.
    double acc = 0.0, hm = 0.0, h = 1.0, sp = 1.0;
    for (int m = 0; m <= n - 2; ++m) {
        acc += sp * h;
        const double hn = 2.0 * z * h - 2.0 * m * hm;
        hm = h;
        h = hn;
        sp *= s;
    }
    return delta + D * acc;
}

/// Implied volatility from a call price: safeguarded Newton inside the bracket [1e-8, 5].
/// Throws NumericError naming the violated bound when the price is not arbitrage-free.
inline double implied_vol_invert(double price, double t, double x, double k, double T) {
    const double tau = T - t;
    if (!(tau > 0.0)) throw Error("implied_vol_invert: maturity must exceed valuation time");
    const double ex = std::exp(x);
    const double lower = std::max(ex - std::exp(k), 0.0);
    if (!std::isfinite(price)) throw NumericError("implied_vol_invert: price is not finite");
    if (price <= lower)
        throw NumericError("implied_vol_invert: price " + std::to_string(price) +
                           " violates the lower bound (e^x - e^k)^+ = " + std::to_string(lower));
    if (price >= ex)
        throw NumericError("implied_vol_invert: price " + std::to_string(price) + " violates the upper bound e^x = " +
                           std::to_string(ex));

    double lo = 1e-8, hi = 5.0;
    const double plo = bs_call(t, x, lo, k, T) - price;
    const double phi = bs_call(t, x, hi, k, T) - price;
    if (plo > 0.0) throw NumericError("implied_vol_invert: implied vol below bracket minimum 1e-8");
    if (phi < 0.0) throw NumericError("implied_vol_invert: implied vol above bracket maximum 5");

    // Brenner-Subrahmanyam style seed, extended away from the money.
    const double ek = std::exp(k);
    const double m = price - 0.5 * (ex - ek);
    const double disc = std::max(m * m - (ex - ek) * (ex - ek) / std::numbers::pi, 0.0);
    double sigma = std::sqrt(2.0 * std::numbers::pi / tau) * (m + std::sqrt(disc)) / (ex + ek);
    if (!(sigma > lo && sigma < hi)) sigma = 0.5 * (lo + hi);

    // Newton on the log of the out-of-the-money time value, which stays well scaled far from the money.
    const double sqt = std::sqrt(tau);
    auto otm = [&](double s) {
        const double sd = s * sqt;
        const double dp = (x - k) / sd + 0.5 * sd;
        const double dm = dp - sd;
        return k >= x ? ex * norm_cdf(dp) - ek * norm_cdf(dm) : ek * norm_cdf(-dm) - ex * norm_cdf(-dp);
    };
    const double target = std::log(price - lower);
    for (int it = 0; it < 200; ++it) {
        const double q = otm(sigma);
        const double diff = q > 0.0 ? std::log(q) - target : -HUGE_VAL;
        if (diff == 0.0) return sigma;
        if (diff > 0.0)
            hi = sigma;
        else
            lo = sigma;
        const double vega = bs_vega(t, x, sigma, k, T);
        double next = sigma - diff * q / vega;
        if (!(q > 0.0) || !(vega > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - sigma);
        sigma = next;
        if (step <= 1e-15 * sigma || hi - lo <= 1e-15 * sigma) break;
    }
    const double resid = std::abs(bs_call(t, x, sigma, k, T) - price);
    if (resid > 1e-12 * ex)
        throw NumericError("implied_vol_invert: residual " + std::to_string(resid) + " above 1e-12 e^x");
    return sigma;
}

}  // namespace indiff
