#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "indiff/error.hpp"
#include "indiff/quadrature.hpp"

namespace indiff {

/// Characteristic function of log(S_T / S_t) under the pricing measure, zero rates.
/// Branch-cut-safe form with the 1/delta^2 factors cancelled analytically, so it stays
/// accurate as delta goes to 0.
inline std::complex<double> heston_cf(std::complex<double> u, double delta, double theta, double kappa, double rho,
                                      double v0, double tau) {
    using C = std::complex<double>;
    const C iu = C(0.0, 1.0) * u;
    const C s = iu + u * u;
    const C beta = kappa - rho * delta * iu;
    const C d = std::sqrt(beta * beta + delta * delta * s);
    const C e = std::exp(-d * tau);
    const C B = -s * (1.0 - e) / ((beta + d) - (beta - d) * e);
    // log((1 - g e) / (1 - g)) = log1p(delta^2 r)
    const C r = -s * (1.0 - e) / (2.0 * d * (beta + d));
    const C q = delta * delta * r;
    const C log1p_over_q = std::abs(q) < 1e-4 ? 1.0 - q / 2.0 + q * q / 3.0 - q * q * q / 4.0 : std::log(1.0 + q) / q;
    const C A = kappa * theta * (-s * tau / (beta + d) - 2.0 * r * log1p_over_q);
    return std::exp(A + B * v0);
}

/// Heston call on e^x with log-strike k, current variance y, maturity tau, by the single-integral
/// formula C = S - sqrt(S K) / pi * int_0^inf Re[e^{i u l} phi(u - i/2)] / (u^2 + 1/4) du, l = x - k.
inline double heston_call_exact(double delta, double theta, double kappa, double rho, double x, double y, double k,
                                 double tau, double abs_tol = 1e-10) {
    if (!(delta > 0.0) || !(theta > 0.0) || !(kappa > 0.0) || !(y >= 0.0))
        throw ConfigError("heston_call_exact: delta, theta, kappa must be > 0 and y >= 0");
    if (!(std::abs(rho) <= 1.0)) throw ConfigError("heston_call_exact: |rho| must be <= 1");
    if (!(tau > 0.0)) throw ConfigError("heston_call_exact: tau must be > 0");
    const double l = x - k;
    const double scale = std::exp(0.5 * (x + k)) / std::numbers::pi;
    auto f = [&](double u) {
        if (u == 0.0) u = std::numeric_limits<double>::min();
        const std::complex<double> z(u, -0.5);
        const std::complex<double> v =
            std::exp(std::complex<double>(0.0, u * l)) * heston_cf(z, delta, theta, kappa, rho, y, tau);
        return v.real() / (u * u + 0.25);
    };
    const double I = integrate(f, 0.0, std::numeric_limits<double>::infinity(), abs_tol / scale, 1e-13);
    const double price = std::exp(x) - scale * I;
    if (!std::isfinite(price)) throw NumericError("heston_call_exact: non-finite price");
    return price;
}

}  // namespace indiff
