#pragma once

#include <cmath>
#include <vector>

#include "indiff/error.hpp"

namespace indiff {

/// Physicists' Hermite polynomial h_n(z): h_0 = 1, h_1 = 2z, h_{n+1} = 2z h_n - 2n h_{n-1}.
inline double hermite_h(int n, double z) {
    if (n < 0) throw Error("hermite_h: negative degree");
    if (n == 0) return 1.0;
    double hm = 1.0, h = 2.0 * z;
    for (int k = 1; k < n; ++k) {
        const double hn = 2.0 * z * h - 2.0 * k * hm;
        hm = h;
        h = hn;
    }
    return h;
}

/// Probabilists' Hermite polynomial He_n(z): He_{n+1} = z He_n - n He_{n-1}.
inline double hermite_he(int n, double z) {
    if (n < 0) throw Error("hermite_he: negative degree");
    if (n == 0) return 1.0;
    double hm = 1.0, h = z;
    for (int k = 1; k < n; ++k) {
        const double hn = z * h - k * hm;
        hm = h;
        h = hn;
    }
    return h;
}

/// He_0(z) .. He_n(z).
inline std::vector<double> hermite_he_all(int n, double z) {
    std::vector<double> out(static_cast<std::size_t>(n + 1));
    out[0] = 1.0;
    if (n >= 1) out[1] = z;
    for (int k = 1; k < n; ++k) out[k + 1] = z * out[k] - k * out[k - 1];
    return out;
}

/// Ratio d_x^n (d_x^2 - d_x) u_BS / (d_x^2 - d_x) u_BS = (-1/(sigma0 sqrt(2 tau)))^n h_n(z),
/// with z = (x - k - sigma0^2 tau / 2) / (sigma0 sqrt(2 tau)).
inline double hermite_ratio(int n, double z, double sigma0, double tau) {
    if (!(sigma0 > 0.0) || !(tau > 0.0)) throw Error("hermite_ratio: sigma0 and tau must be > 0");
    const double s = -1.0 / (sigma0 * std::sqrt(2.0 * tau));
    return std::pow(s, n) * hermite_h(n, z);
}

}  // namespace indiff
