#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "indiff/model.hpp"
#include "indiff/nontraded.hpp"
#include "indiff/oracles/grid.hpp"

namespace indiff {

struct Fd1dParams {
    double y_lo = 0.0;
    double y_hi = 1.0;
    int ny = 401;
    int nt = 400;
    int rannacher_steps = 2;
    /// Payoff kinks to place on mesh nodes (the first one inside the domain is honoured exactly).
    std::vector<double> kinks;
};

namespace detail {

/// Thomas algorithm; sub/diag/sup are overwritten.
inline void thomas(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
                   std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

inline std::vector<double> aligned_nodes(const Fd1dParams& p) {
    const double dy = (p.y_hi - p.y_lo) / (p.ny - 1);
    double shift = 0.0;
    for (double k : p.kinks)
        if (k > p.y_lo && k < p.y_hi) {
            const double off = (k - p.y_lo) / dy;
            shift = (off - std::round(off)) * dy;
            break;
        }
    std::vector<double> y(static_cast<std::size_t>(p.ny));
    for (int i = 0; i < p.ny; ++i) y[static_cast<std::size_t>(i)] = p.y_lo + shift + i * dy;
    return y;
}

/// One backward solve of xi_t + f xi_y + b xi_yy - w h xi = 0, xi(T) = theta, with Neumann ends.
inline std::vector<double> xi_solve_1d(const LSVModel& m, const std::function<double(double)>& theta, double tau,
                                       const std::vector<double>& y, int nt, int rannacher_steps) {
    const std::size_t n = y.size();
    const double dy = y[1] - y[0];
    const double w = 1.0 - m.rho * m.rho;
    std::vector<double> lo(n), di(n), up(n);
    for (std::size_t i = 0; i < n; ++i) {
        const GroupedCoeffs c = grouped_coefficients_unchecked(m, 0.0, y[i]);
        const double diff = c.b / (dy * dy), conv = c.f / (2.0 * dy);
        lo[i] = diff - conv;
        up[i] = diff + conv;
        di[i] = -2.0 * diff - w * c.h;
        if (i == 0) {
            up[i] += lo[i];
            lo[i] = 0.0;
        }
        if (i == n - 1) {
            lo[i] += up[i];
            up[i] = 0.0;
        }
    }
    auto apply_L = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = di[i] * v[i];
            if (i > 0) s += lo[i] * v[i - 1];
            if (i + 1 < n) s += up[i] * v[i + 1];
            out[i] = s;
        }
    };
    std::vector<double> v(n), Lv(n), a(n), b(n), c(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = theta(y[i]);
    const double dt = tau / nt;
    auto step = [&](double h, double theta_w) {
        apply_L(v, Lv);
        for (std::size_t i = 0; i < n; ++i) {
            rhs[i] = v[i] + (1.0 - theta_w) * h * Lv[i];
            a[i] = -theta_w * h * lo[i];
            b[i] = 1.0 - theta_w * h * di[i];
            c[i] = -theta_w * h * up[i];
        }
        thomas(a, b, c, rhs);
        v.swap(rhs);
    };
    int done = 0;
    for (int r = 0; r < rannacher_steps && done < nt; ++r, ++done) {
        step(0.5 * dt, 1.0);
        step(0.5 * dt, 1.0);
    }
    for (; done < nt; ++done) step(dt, 0.5);
    for (double x : v)
        if (!std::isfinite(x)) throw NumericError("xi FD solve diverged");
    return v;
}

struct XiPair {
    std::vector<double> yc, vc, yf, vf;
};

inline XiPair xi_pair(const LSVModel& m, const DistortedTerminal& theta, double tau, const Fd1dParams& p) {
    if (!m.y_only) throw ConfigError("xi FD solve: model coefficients must depend on y only");
    if (p.ny < 5 || p.nt < 1) throw ConfigError("xi FD solve: mesh too coarse");
    XiPair r;
    r.yc = aligned_nodes(p);
    Fd1dParams pf = p;
    pf.ny = 2 * p.ny - 1;
    pf.y_lo = r.yc.front();
    pf.y_hi = r.yc.back();
    pf.kinks.clear();
    r.yf = aligned_nodes(pf);
    if (!m.domain.contains(0.0, r.yc.front()) || !m.domain.contains(0.0, r.yc.back()))
        throw DomainError("xi FD solve: mesh leaves the model domain");
    auto th = [&](double y) { return theta(y); };
    r.vc = xi_solve_1d(m, th, tau, r.yc, p.nt, p.rannacher_steps);
    r.vf = xi_solve_1d(m, th, tau, r.yf, 2 * p.nt, p.rannacher_steps);
    return r;
}

}  // namespace detail

/// xi(t, .) for the linearised non-traded problem by Crank-Nicolson with Rannacher start-up.
/// Values come from the (2 ny - 1, 2 nt) mesh; the Richardson estimate compares with (ny, nt).
inline GridSolution solve_xi_fd_1d(const LSVModel& m, const DistortedTerminal& theta, double tau, const Fd1dParams& p) {
    const detail::XiPair r = detail::xi_pair(m, theta, tau, p);
    GridSolution g;
    g.y = r.yf;
    g.values = r.vf;
    g.nt = 2 * p.nt;
    g.dt = tau / (2 * p.nt);
    g.scheme = "crank-nicolson+rannacher (1-D xi)";
    double err = 0.0;
    for (std::size_t i = 0; i < r.vc.size(); ++i) err = std::max(err, std::abs(r.vf[2 * i] - r.vc[i]) / 3.0);
    g.richardson_error = err;
    g.validate();
    return g;
}

struct FdPrice {
    double value = 0.0;
    double error_estimate = 0.0;
    nlohmann::json report;
};

/// Exact-oracle non-traded indifference price u = (log xi[theta=1] - log xi[theta]) / ((1 - rho^2) gamma_nu)
/// at y, Richardson-extrapolated over the (ny, nt) and (2 ny - 1, 2 nt) meshes.
inline FdPrice nontraded_price_fd(const LSVModel& m, const PayoffY& payoff, double gamma_nu, double t, double y,
                                  double T, const Fd1dParams& p) {
    if (gamma_nu == 0.0) throw ConfigError("nontraded_price_fd: gamma_nu must be non-zero");
    const double tau = T - t;
    const double w = 1.0 - m.rho * m.rho;
    const detail::XiPair pt = detail::xi_pair(m, distorted_terminal(payoff, gamma_nu, m.rho), tau, p);
    const detail::XiPair p1 = detail::xi_pair(m, unit_terminal(m.rho), tau, p);
    auto at = [y](const std::vector<double>& nodes, const std::vector<double>& vals) {
        GridSolution g;
        g.y = nodes;
        g.values = vals;
        return g.interpolate(y);
    };
    const double u_fine = (std::log(at(p1.yf, p1.vf)) - std::log(at(pt.yf, pt.vf))) / (w * gamma_nu);
    const double u_coarse = (std::log(at(p1.yc, p1.vc)) - std::log(at(pt.yc, pt.vc))) / (w * gamma_nu);
    FdPrice out;
    out.value = (4.0 * u_fine - u_coarse) / 3.0;
    out.error_estimate = std::abs(u_fine - u_coarse) / 3.0;
    GridSolution meta;
    meta.y = pt.yf;
    meta.nt = 2 * p.nt;
    meta.dt = tau / (2 * p.nt);
    meta.richardson_error = out.error_estimate;
    meta.scheme = "crank-nicolson+rannacher (1-D xi), Richardson-extrapolated";
    out.report = meta.to_json(out.value);
    return out;
}

}  // namespace indiff
