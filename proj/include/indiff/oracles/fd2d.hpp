#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseLU>
#include <json.hpp>

#include "indiff/model.hpp"
#include "indiff/oracles/grid.hpp"

namespace indiff {

struct Fd2dParams {
    double x_lo = -0.6;
    double x_hi = 0.6;
    double y_lo = 0.0;
    double y_hi = 0.2;
    int nx = 201;  ///< odd, so the Richardson mesh is nested
    int ny = 101;  ///< odd, so the Richardson mesh is nested
    int nt = 2000; ///< even
    int rannacher_steps = 2;
    bool richardson = true;
};

/// FD values of eta and of u for each requested gamma_nu, at the valuation time.
struct TradedFdResult {
    GridSolution eta;
    std::vector<double> gamma_nu;
    std::vector<GridSolution> u;
    /// Same fields on the half mesh; empty when Richardson is off.
    GridSolution eta_coarse;
    std::vector<GridSolution> u_coarse;

    struct PointValue {
        double value = 0.0;
        double richardson = 0.0;  ///< |fine - coarse| / 3
    };
    PointValue eta_at(double x, double y) const { return point(eta, eta_coarse, x, y); }
    PointValue u_at(std::size_t i, double x, double y) const {
        return point(u.at(i), u_coarse.empty() ? GridSolution{} : u_coarse.at(i), x, y);
    }

private:
    static PointValue point(const GridSolution& f, const GridSolution& c, double x, double y) {
        PointValue p;
        p.value = f.interpolate(x, y);
        if (!c.values.empty()) p.richardson = std::abs(p.value - c.interpolate(x, y)) / 3.0;
        return p;
    }
};

namespace detail {

class Fd2dSolver {
public:
    Fd2dSolver(const LSVModel& m, const Fd2dParams& p, double log_strike)
        : p_(p), k_(log_strike), w_(1.0 - m.rho * m.rho) {
        if (p.nx < 5 || p.ny < 5 || p.nt < 2) throw ConfigError("2-D FD: mesh too coarse");
        if (!(p.x_hi > p.x_lo) || !(p.y_hi > p.y_lo)) throw ConfigError("2-D FD: empty domain");
        if (!m.domain.contains(p.x_lo, p.y_lo) || !m.domain.contains(p.x_hi, p.y_hi))
            throw DomainError("2-D FD: mesh leaves the model domain");
        x_ = uniform_nodes(p.x_lo, p.x_hi, static_cast<std::size_t>(p.nx));
        y_ = uniform_nodes(p.y_lo, p.y_hi, static_cast<std::size_t>(p.ny));
        dx_ = x_[1] - x_[0];
        dy_ = y_[1] - y_[0];
        const std::size_t n = size();
        coef_.resize(n);
        for (int i = 0; i < p.nx; ++i)
            for (int j = 0; j < p.ny; ++j) coef_[idx(i, j)] = grouped_coefficients_unchecked(m, x_[i], y_[j]);
        // The lower y edge is an outflow-free degenerate boundary when diffusion vanishes there.
        degenerate_lo_ = true;
        for (int i = 0; i < p.nx; ++i)
            if (coef_[idx(i, 0)].b != 0.0) degenerate_lo_ = false;
        L_eta_ = build(false);
        L_u_ = build(true);
    }

    /// Backward solve over tau; returns eta followed by one u per gamma_nu.
    std::vector<Eigen::VectorXd> run(double tau, const std::vector<double>& gnus) const {
        const double dt = tau / p_.nt;
        const std::size_t n = size();
        Eigen::VectorXd eta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        std::vector<Eigen::VectorXd> u(gnus.size(), Eigen::VectorXd(static_cast<Eigen::Index>(n)));
        for (auto& v : u)
            for (int i = 0; i < p_.nx; ++i)
                for (int j = 0; j < p_.ny; ++j)
                    v[static_cast<Eigen::Index>(idx(i, j))] = std::max(std::exp(x_[i]) - std::exp(k_), 0.0);

        struct Stepper {
            Eigen::SparseLU<Eigen::SparseMatrix<double>> eta, u;
        };
        auto factor = [&](double h, double th) {
            auto make = [&](const Eigen::SparseMatrix<double>& L, Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu) {
                Eigen::SparseMatrix<double> A(L.rows(), L.cols());
                A.setIdentity();
                A -= (th * h) * L;
                A.makeCompressed();
                lu.compute(A);
                if (lu.info() != Eigen::Success) throw NumericError("2-D FD: sparse LU factorisation failed");
            };
            auto s = std::make_unique<Stepper>();
            make(L_eta_, s->eta);
            make(L_u_, s->u);
            return s;
        };
        const auto cn = factor(dt, 0.5);
        const auto be = p_.rannacher_steps > 0 ? factor(0.5 * dt, 1.0) : nullptr;

        auto step = [&](const Stepper& s, double h, double th) {
            const Eigen::VectorXd Ne = nonlinear_eta(eta);
            const Eigen::VectorXd base_e = eta + (1.0 - th) * h * (L_eta_ * eta);
            Eigen::VectorXd pe = s.eta.solve(base_e + h * Ne);
            Eigen::VectorXd eta_new = s.eta.solve(base_e + 0.5 * h * (Ne + nonlinear_eta(pe)));
            for (std::size_t q = 0; q < u.size(); ++q) {
                const Eigen::VectorXd Nu = nonlinear_u(u[q], eta, gnus[q]);
                Eigen::VectorXd base_u = u[q] + (1.0 - th) * h * (L_u_ * u[q]);
                Eigen::VectorXd pu = s.u.solve(dirichlet(base_u + h * Nu));
                u[q] = s.u.solve(dirichlet(base_u + 0.5 * h * (Nu + nonlinear_u(pu, eta_new, gnus[q]))));
            }
            eta = std::move(eta_new);
        };
        for (int r = 0; r < p_.nt; ++r) {
            if (r < p_.rannacher_steps) {
                step(*be, 0.5 * dt, 1.0);
                step(*be, 0.5 * dt, 1.0);
            } else {
                step(*cn, dt, 0.5);
            }
            if ((r + 1) % 50 == 0 || r + 1 == p_.nt) check(eta, u, r + 1, dt);
        }
        std::vector<Eigen::VectorXd> out;
        out.push_back(eta);
        for (auto& v : u) out.push_back(v);
        return out;
    }

    GridSolution grid(const Eigen::VectorXd& v, double tau, const std::string& scheme) const {
        GridSolution g;
        g.x = x_;
        g.y = y_;
        g.values.assign(v.data(), v.data() + v.size());
        g.nt = p_.nt;
        g.dt = tau / p_.nt;
        g.scheme = scheme;
        return g;
    }

private:
    std::size_t size() const { return static_cast<std::size_t>(p_.nx) * static_cast<std::size_t>(p_.ny); }
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(p_.ny) + static_cast<std::size_t>(j);
    }
    /// Reflection across the edge implements homogeneous Neumann conditions with ghost nodes.
    static int reflect(int i, int n) { return i < 0 ? -i : (i >= n ? 2 * (n - 1) - i : i); }

    Eigen::SparseMatrix<double> build(bool dirichlet_x) const {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(size() * 9);
        const double dx2 = dx_ * dx_, dy2 = dy_ * dy_;
        for (int i = 0; i < p_.nx; ++i)
            for (int j = 0; j < p_.ny; ++j) {
                const std::size_t row = idx(i, j);
                if (dirichlet_x && (i == 0 || i == p_.nx - 1)) continue;
                const GroupedCoeffs& c = coef_[row];
                auto add = [&](int ii, int jj, double v) {
                    trip.emplace_back(static_cast<int>(row),
                                      static_cast<int>(idx(reflect(ii, p_.nx), reflect(jj, p_.ny))), v);
                };
                add(i + 1, j, c.a / dx2 - c.a / (2.0 * dx_));
                add(i - 1, j, c.a / dx2 + c.a / (2.0 * dx_));
                add(i, j, -2.0 * c.a / dx2);
                if (j == 0 && degenerate_lo_) {
                    add(i, j, -1.5 * c.f / dy_);
                    add(i, j + 1, 2.0 * c.f / dy_);
                    add(i, j + 2, -0.5 * c.f / dy_);
                } else {
                    add(i, j + 1, c.b / dy2 + c.f / (2.0 * dy_));
                    add(i, j - 1, c.b / dy2 - c.f / (2.0 * dy_));
                    add(i, j, -2.0 * c.b / dy2);
                    const double gm = c.g / (4.0 * dx_ * dy_);
                    add(i + 1, j + 1, gm);
                    add(i + 1, j - 1, -gm);
                    add(i - 1, j + 1, -gm);
                    add(i - 1, j - 1, gm);
                }
            }
        Eigen::SparseMatrix<double> L(static_cast<int>(size()), static_cast<int>(size()));
        L.setFromTriplets(trip.begin(), trip.end());
        return L;
    }

    double dy_at(const Eigen::VectorXd& v, int i, int j) const {
        auto at = [&](int jj) { return v[static_cast<Eigen::Index>(idx(i, jj))]; };
        if (j == 0) return degenerate_lo_ ? (-1.5 * at(0) + 2.0 * at(1) - 0.5 * at(2)) / dy_ : 0.0;
        if (j == p_.ny - 1) return 0.0;
        return (at(j + 1) - at(j - 1)) / (2.0 * dy_);
    }

    Eigen::VectorXd nonlinear_eta(const Eigen::VectorXd& eta) const {
        Eigen::VectorXd out(eta.size());
        for (int i = 0; i < p_.nx; ++i)
            for (int j = 0; j < p_.ny; ++j) {
                const GroupedCoeffs& c = coef_[idx(i, j)];
                const double d = dy_at(eta, i, j);
                out[static_cast<Eigen::Index>(idx(i, j))] = w_ * c.b * d * d - c.h;
            }
        return out;
    }

    Eigen::VectorXd nonlinear_u(const Eigen::VectorXd& u, const Eigen::VectorXd& eta, double gnu) const {
        Eigen::VectorXd out(u.size());
        for (int i = 0; i < p_.nx; ++i)
            for (int j = 0; j < p_.ny; ++j) {
                const GroupedCoeffs& c = coef_[idx(i, j)];
                const double du = dy_at(u, i, j), de = dy_at(eta, i, j);
                out[static_cast<Eigen::Index>(idx(i, j))] = w_ * c.b * (2.0 * du * de - gnu * du * du);
            }
        return out;
    }

    /// Far-field call values: 0 on the left edge, e^x - e^k on the right edge.
    Eigen::VectorXd dirichlet(Eigen::VectorXd rhs) const {
        const double right = std::exp(x_.back()) - std::exp(k_);
        for (int j = 0; j < p_.ny; ++j) {
            rhs[static_cast<Eigen::Index>(idx(0, j))] = 0.0;
            rhs[static_cast<Eigen::Index>(idx(p_.nx - 1, j))] = right;
        }
        return rhs;
    }

    void check(const Eigen::VectorXd& eta, const std::vector<Eigen::VectorXd>& u, int steps, double dt) const {
        const double cap = 1e6 * (1.0 + std::exp(x_.back()));
        auto bad = [&](const Eigen::VectorXd& v) { return !v.allFinite() || v.cwiseAbs().maxCoeff() > cap; };
        bool fail = bad(eta);
        for (const auto& v : u) fail = fail || bad(v);
        if (fail)
            throw NumericError("2-D FD diverged after " + std::to_string(steps) + " of " + std::to_string(p_.nt) +
                               " steps (dt = " + std::to_string(dt) + ", nx = " + std::to_string(p_.nx) +
                               ", ny = " + std::to_string(p_.ny) + ")");
    }

    Fd2dParams p_;
    double k_;
    double w_;
    std::vector<double> x_, y_;
    double dx_ = 0.0, dy_ = 0.0;
    std::vector<GroupedCoeffs> coef_;
    bool degenerate_lo_ = false;
    Eigen::SparseMatrix<double> L_eta_, L_u_;
};

}  // namespace detail

/// Co-solves the HJB pair for eta and the call indifference price u (one u per gamma_nu) by an
/// IMEX scheme: Crank-Nicolson on the linear generator, explicit predictor-corrector on the
/// gradient nonlinearities, Rannacher start-up. Neumann in y (one-sided drift on a degenerate
/// lower edge), Neumann in x for eta, far-field call values in x for u.
inline TradedFdResult solve_traded_fd(const LSVModel& model, double log_strike, double tau,
                                      const std::vector<double>& gamma_nus, const Fd2dParams& p) {
    if (!(tau > 0.0)) throw ConfigError("2-D FD: time to maturity must be positive");
    if (p.richardson && (p.nx % 2 == 0 || p.ny % 2 == 0 || p.nt % 2 != 0))
        throw ConfigError("2-D FD: Richardson needs odd nx, ny and even nt");
    const std::string scheme = "IMEX crank-nicolson+rannacher, predictor-corrector nonlinearity (2-D)";
    TradedFdResult r;
    r.gamma_nu = gamma_nus;
    {
        detail::Fd2dSolver s(model, p, log_strike);
        const auto v = s.run(tau, gamma_nus);
        r.eta = s.grid(v[0], tau, scheme);
        for (std::size_t q = 0; q < gamma_nus.size(); ++q) r.u.push_back(s.grid(v[q + 1], tau, scheme));
    }
    if (p.richardson) {
        Fd2dParams pc = p;
        pc.nx = (p.nx + 1) / 2;
        pc.ny = (p.ny + 1) / 2;
        pc.nt = p.nt / 2;
        detail::Fd2dSolver s(model, pc, log_strike);
        const auto v = s.run(tau, gamma_nus);
        r.eta_coarse = s.grid(v[0], tau, scheme);
        for (std::size_t q = 0; q < gamma_nus.size(); ++q) r.u_coarse.push_back(s.grid(v[q + 1], tau, scheme));
        auto nested_max = [&](GridSolution& f, const GridSolution& c) {
            double e = 0.0;
            for (std::size_t i = 0; i < c.nx(); ++i)
                for (std::size_t j = 0; j < c.ny(); ++j) e = std::max(e, std::abs(f.at(2 * i, 2 * j) - c.at(i, j)));
            f.richardson_error = e / 3.0;
        };
        nested_max(r.eta, r.eta_coarse);
        for (std::size_t q = 0; q < gamma_nus.size(); ++q) nested_max(r.u[q], r.u_coarse[q]);
    }
    r.eta.validate();
    for (const auto& g : r.u) g.validate();
    return r;
}

/// eta alone (zero terminal data).
inline GridSolution solve_eta_fd(const LSVModel& model, double tau, const Fd2dParams& p) {
    return solve_traded_fd(model, 0.0, tau, {}, p).eta;
}

/// Call indifference price u for one gamma_nu; eta is co-solved on the same mesh.
inline GridSolution solve_u_fd(const LSVModel& model, double log_strike, double gamma_nu, double tau,
                               const Fd2dParams& p) {
    return solve_traded_fd(model, log_strike, tau, {gamma_nu}, p).u.front();
}

}  // namespace indiff
