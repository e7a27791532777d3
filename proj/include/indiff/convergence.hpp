#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "indiff/nontraded.hpp"
#include "indiff/oracles/fd1d.hpp"

namespace indiff {

/// Least-squares slope of log(err) against log(tau).
inline double loglog_slope(const std::vector<double>& taus, const std::vector<double>& errs) {
    if (taus.size() != errs.size() || taus.size() < 2) throw ConfigError("loglog_slope: need matching series of length >= 2");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0.0) || !(errs[i] > 0.0)) throw NumericError("loglog_slope: non-positive entry");
        const double x = std::log(taus[i]), y = std::log(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct ProbeResult {
    std::vector<double> taus;
    std::array<std::vector<double>, 3> sup_error;  ///< sup over the y-grid of |u - ubar_m|, per tau
    std::vector<double> oracle_error;              ///< sup over the y-grid of the FD Richardson estimate, per tau
    std::array<double, 3> slope{0.0, 0.0, 0.0};
    std::array<bool, 3> oracle_dominated{false, false, false};
    int ny = 0;
    int nt = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["taus"] = taus;
        j["oracle_error"] = oracle_error;
        j["mesh"] = {{"ny", ny}, {"nt", nt}};
        for (int m = 0; m < 3; ++m) {
            nlohmann::json r;
            r["sup_error"] = sup_error[m];
            r["slope"] = slope[m];
            r["oracle_dominated"] = oracle_dominated[m];
            j["orders"].push_back(r);
        }
        return j;
    }
};

/// Empirical convergence of ubar_0..ubar_2 to the 1-D FD price as tau shrinks.
/// The mesh is refined (ny, nt doubled, at most `max_refinements` times) until the oracle's
/// Richardson estimate is below 10% of the measured ubar_2 error at the largest tau.
/// Orders whose error at the largest tau stays below that floor are flagged.
inline ProbeResult convergence_probe(const LSVModel& model, const PayoffY& payoff, double gamma_nu,
                                     const std::vector<double>& y_grid, const std::vector<double>& taus,
                                     Fd1dParams fd, int max_refinements = 2) {
    if (taus.size() < 4) throw ConfigError("convergence probe: need at least 4 maturities");
    for (std::size_t i = 1; i < taus.size(); ++i)
        if (!(taus[i] < taus[i - 1])) throw ConfigError("convergence probe: maturities must be decreasing");
    if (y_grid.empty()) throw ConfigError("convergence probe: empty y-grid");
    if (gamma_nu == 0.0) throw ConfigError("convergence probe: gamma_nu must be non-zero");
    if (payoff.kind == PayoffY::Kind::call_spread) fd.kinks = {payoff.k1, payoff.k2};
    const double w = 1.0 - model.rho * model.rho;
    const DistortedTerminal th = distorted_terminal(payoff, gamma_nu, model.rho);
    const DistortedTerminal one = unit_terminal(model.rho);

    for (int attempt = 0;; ++attempt) {
        ProbeResult r;
        r.taus = taus;
        r.ny = fd.ny;
        r.nt = fd.nt;
        for (double tau : taus) {
            const detail::XiPair pt = detail::xi_pair(model, th, tau, fd);
            const detail::XiPair p1 = detail::xi_pair(model, one, tau, fd);
            auto at = [](const std::vector<double>& nodes, const std::vector<double>& vals, double y) {
                GridSolution g;
                g.y = nodes;
                g.values = vals;
                return g.interpolate(y);
            };
            std::array<double, 3> sup{0.0, 0.0, 0.0};
            double oerr = 0.0;
            for (double y : y_grid) {
                const double uf = (std::log(at(p1.yf, p1.vf, y)) - std::log(at(pt.yf, pt.vf, y))) / (w * gamma_nu);
                const double uc = (std::log(at(p1.yc, p1.vc, y)) - std::log(at(pt.yc, pt.vc, y))) / (w * gamma_nu);
                oerr = std::max(oerr, std::abs(uf - uc) / 3.0);
                const NontradedPrice np = nontraded_price(model, payoff, gamma_nu, 0.0, y, tau, 2);
                for (int m = 0; m < 3; ++m) sup[m] = std::max(sup[m], std::abs(uf - np.ubar[m]));
            }
            for (int m = 0; m < 3; ++m) r.sup_error[m].push_back(sup[m]);
            r.oracle_error.push_back(oerr);
        }
        for (int m = 0; m < 3; ++m) {
            r.slope[m] = loglog_slope(r.taus, r.sup_error[m]);
            r.oracle_dominated[m] = r.oracle_error.front() > 0.1 * r.sup_error[m].front();
        }
        if (!r.oracle_dominated[2] || attempt >= max_refinements) return r;
        fd.ny = 2 * fd.ny - 1;
        fd.nt *= 2;
    }
}

/// Slope of log sup_y |u - ubar_m| against log tau.
inline double convergence_order_probe(const LSVModel& model, const PayoffY& payoff, double gamma_nu,
                                      const std::vector<double>& y_grid, const std::vector<double>& taus, int m,
                                      const Fd1dParams& fd) {
    if (m < 0 || m > 2) throw ConfigError("convergence probe: order must be 0, 1 or 2");
    return convergence_probe(model, payoff, gamma_nu, y_grid, taus, fd).slope[static_cast<std::size_t>(m)];
}

}  // namespace indiff
