#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "indiff/error.hpp"

namespace indiff {

/// Grouped coefficients of the pricing operator:
///   a = sigma^2/2, b = beta^2/2, f = c - rho*beta*lambda, g = rho*sigma*beta, h = lambda^2/2.
enum class Coeff : int { a = 0, b = 1, f = 2, g = 3, h = 4 };

inline constexpr std::array<Coeff, 5> kAllCoeffs{Coeff::a, Coeff::b, Coeff::f, Coeff::g, Coeff::h};

inline const char* coeff_name(Coeff c) {
    switch (c) {
        case Coeff::a: return "a";
        case Coeff::b: return "b";
        case Coeff::f: return "f";
        case Coeff::g: return "g";
        case Coeff::h: return "h";
    }
    return "?";
}

/// Slot order of the six Taylor indices (i, j) with i + j <= 2.
inline constexpr std::array<std::pair<int, int>, 6> kTaylorIndices{
    {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}};

constexpr int taylor_slot(int i, int j) {
    if (i < 0 || j < 0 || i + j > 2) return -1;
    constexpr int offset[3] = {0, 1, 3};
    return offset[i + j] + j;
}

struct GroupedCoeffs {
    double a = 0.0;
    double b = 0.0;
    double f = 0.0;
    double g = 0.0;
    double h = 0.0;

    double operator[](Coeff c) const {
        switch (c) {
            case Coeff::a: return a;
            case Coeff::b: return b;
            case Coeff::f: return f;
            case Coeff::g: return g;
            case Coeff::h: return h;
        }
        return 0.0;
    }
};

/// Rectangular validity box; evaluation outside raises instead of extrapolating.
struct DomainBox {
    double x_lo = -std::numeric_limits<double>::infinity();
    double x_hi = std::numeric_limits<double>::infinity();
    double y_lo = -std::numeric_limits<double>::infinity();
    double y_hi = std::numeric_limits<double>::infinity();

    bool contains(double x, double y) const {
        return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi;
    }
    double clamp_y(double y) const { return std::min(std::max(y, y_lo), y_hi); }
    double clamp_x(double x) const { return std::min(std::max(x, x_lo), x_hi); }
};

using CoeffFn = std::function<double(double x, double y)>;

/// Per grouped coefficient, the raw partials d_x^i d_y^j chi in taylor_slot order.
using DerivativeTable = std::array<std::array<double, 6>, 5>;
using DerivativeBundle = std::function<DerivativeTable(double x, double y)>;

/// Local-stochastic volatility model (X = log price, Y = non-traded factor).
///
/// Immutable after construction. `derivatives` and `grouped_closed_form` are
/// optional: builtins supply them, user models may leave them empty, in which
/// case Taylor coefficients come from central differences.
struct LSVModel {
    std::string name;
    CoeffFn mu;
    CoeffFn sigma;
    CoeffFn c;
    CoeffFn beta;
    double rho = 0.0;
    DomainBox domain;
    DerivativeBundle derivatives;
    std::function<GroupedCoeffs(double, double)> grouped_closed_form;
    bool zero_h01 = false;  ///< force (lambda^2/2)_{0,1} = 0 in Taylor tables
    bool y_only = false;    ///< coefficients do not depend on x
};

inline void validate(const LSVModel& m) {
    if (!m.mu || !m.sigma || !m.c || !m.beta)
        throw ConfigError("model '" + m.name + "': all of mu, sigma, c, beta must be provided");
    if (!(m.rho >= -1.0 && m.rho <= 1.0))
        throw ConfigError("model '" + m.name + "': rho must lie in [-1, 1]");
    if (!(m.domain.x_lo < m.domain.x_hi) || !(m.domain.y_lo < m.domain.y_hi))
        throw ConfigError("model '" + m.name + "': empty domain box");
}

namespace detail {

inline void require_finite(double v, const char* what, double x, double y) {
    if (!std::isfinite(v))
        throw DomainError(std::string("coefficient ") + what + " is not finite at (x, y) = (" +
                          std::to_string(x) + ", " + std::to_string(y) + ")");
}

}  // namespace detail

/// Evaluates (a, b, f, g, h) from (mu, sigma, c, beta, rho), checking the domain.
inline GroupedCoeffs grouped_coefficients(const LSVModel& m, double x, double y) {
    if (!m.domain.contains(x, y))
        throw DomainError("model '" + m.name + "' evaluated outside its domain at (x, y) = (" +
                          std::to_string(x) + ", " + std::to_string(y) + ")");
    const double sig = m.sigma(x, y);
    detail::require_finite(sig, "sigma", x, y);
    if (sig <= 0.0)
        throw DomainError("coefficient sigma must be > 0, got " + std::to_string(sig) + " at (x, y) = (" +
                          std::to_string(x) + ", " + std::to_string(y) + ")");
    const double mu = m.mu(x, y);
    const double cc = m.c(x, y);
    const double bet = m.beta(x, y);
    detail::require_finite(mu, "mu", x, y);
    detail::require_finite(cc, "c", x, y);
    detail::require_finite(bet, "beta", x, y);
    const double lam = mu / sig;
    detail::require_finite(lam, "lambda", x, y);
    GroupedCoeffs out;
    out.a = 0.5 * sig * sig;
    out.b = 0.5 * bet * bet;
    out.f = cc - m.rho * bet * lam;
    out.g = m.rho * sig * bet;
    out.h = 0.5 * lam * lam;
    return out;
}

/// No domain or positivity checks; prefers the closed form when the model has one.
/// Used by simulation and grid code that evaluates on the closure of the domain.
inline GroupedCoeffs grouped_coefficients_unchecked(const LSVModel& m, double x, double y) {
    if (m.grouped_closed_form) return m.grouped_closed_form(x, y);
    const double sig = m.sigma(x, y);
    const double bet = m.beta(x, y);
    const double lam = sig > 0.0 ? m.mu(x, y) / sig : 0.0;
    return {0.5 * sig * sig, 0.5 * bet * bet, m.c(x, y) - m.rho * bet * lam, m.rho * sig * bet,
            0.5 * lam * lam};
}

/// Normalised Taylor coefficients chi_{i,j} = d_x^i d_y^j chi(xbar, ybar) / (i! j!)
/// of the grouped coefficients, to total order 2.
struct TaylorTable {
    double xbar = 0.0;
    double ybar = 0.0;
    double rho = 0.0;
    DerivativeTable coeffs{};

    double at(Coeff c, int i, int j) const {
        const int s = taylor_slot(i, j);
        if (s < 0) return 0.0;
        return coeffs[static_cast<int>(c)][s];
    }
    double& at(Coeff c, int i, int j) {
        const int s = taylor_slot(i, j);
        if (s < 0) throw ConfigError("Taylor index out of range");
        return coeffs[static_cast<int>(c)][s];
    }
    double operator()(Coeff c, int i, int j) const { return at(c, i, j); }

    /// sigma_0 = sqrt(2 a_{0,0}); the single source of truth for the zeroth-order vol.
    double sigma0() const { return std::sqrt(2.0 * at(Coeff::a, 0, 0)); }
    double one_minus_rho2() const { return 1.0 - rho * rho; }

    void validate() const {
        for (Coeff c : kAllCoeffs)
            for (int s = 0; s < 6; ++s)
                if (!std::isfinite(coeffs[static_cast<int>(c)][s]))
                    throw DomainError(std::string("Taylor entry ") + coeff_name(c) + "_{" +
                                      std::to_string(kTaylorIndices[s].first) + "," +
                                      std::to_string(kTaylorIndices[s].second) + "} is not finite");
        if (!(at(Coeff::a, 0, 0) > 0.0)) throw DomainError("Taylor table requires a_{0,0} > 0");
        if (!(at(Coeff::b, 0, 0) >= 0.0)) throw DomainError("Taylor table requires b_{0,0} >= 0");
        if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("Taylor table requires rho in [-1, 1]");
    }
};

namespace detail {

inline double fd_step_first(double v) { return std::max(1e-5, 1e-5 * std::abs(v)); }
inline double fd_step_second(double v) { return std::max(1e-3, 1e-3 * std::abs(v)); }

/// Raw partial derivatives of the grouped coefficients by central differences.
/// Second derivatives: 3-point / 9-point mixed stencil with one Richardson step.
inline DerivativeTable fd_derivatives(const LSVModel& m, double x, double y) {
    auto eval = [&](double xx, double yy) { return grouped_coefficients(m, xx, yy); };
    DerivativeTable d{};
    const GroupedCoeffs c0 = eval(x, y);

    const double hx1 = fd_step_first(x);
    const double hy1 = fd_step_first(y);
    const GroupedCoeffs xp = eval(x + hx1, y), xm = eval(x - hx1, y);
    const GroupedCoeffs yp = eval(x, y + hy1), ym = eval(x, y - hy1);

    auto second = [&](double hx, double hy, Coeff c, int which) {
        // which: 0 -> xx, 1 -> xy, 2 -> yy
        if (which == 0) return (eval(x + hx, y)[c] - 2.0 * c0[c] + eval(x - hx, y)[c]) / (hx * hx);
        if (which == 2) return (eval(x, y + hy)[c] - 2.0 * c0[c] + eval(x, y - hy)[c]) / (hy * hy);
        return (eval(x + hx, y + hy)[c] - eval(x + hx, y - hy)[c] - eval(x - hx, y + hy)[c] +
                eval(x - hx, y - hy)[c]) /
               (4.0 * hx * hy);
    };
    const double hx2 = fd_step_second(x);
    const double hy2 = fd_step_second(y);

    for (Coeff c : kAllCoeffs) {
        auto& row = d[static_cast<int>(c)];
        row[0] = c0[c];
        row[1] = (xp[c] - xm[c]) / (2.0 * hx1);
        row[2] = (yp[c] - ym[c]) / (2.0 * hy1);
        for (int which = 0; which < 3; ++which) {
            const double coarse = second(hx2, hy2, c, which);
            const double fine = second(0.5 * hx2, 0.5 * hy2, c, which);
            row[3 + which] = (4.0 * fine - coarse) / 3.0;
        }
    }
    return d;
}

inline double factorial_small(int n) {
    double r = 1.0;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
}

inline TaylorTable normalise(const LSVModel& m, const DerivativeTable& raw, double xbar, double ybar,
                             int order) {
    TaylorTable t;
    t.xbar = xbar;
    t.ybar = ybar;
    t.rho = m.rho;
    for (Coeff c : kAllCoeffs) {
        for (int s = 0; s < 6; ++s) {
            const auto [i, j] = kTaylorIndices[s];
            const double v = raw[static_cast<int>(c)][s];
            if (!std::isfinite(v))
                throw DomainError(std::string("non-finite derivative of coefficient ") + coeff_name(c) +
                                  " at index (" + std::to_string(i) + "," + std::to_string(j) + ")");
            t.coeffs[static_cast<int>(c)][s] =
                (i + j <= order) ? v / (factorial_small(i) * factorial_small(j)) : 0.0;
        }
    }
    if (m.zero_h01) t.at(Coeff::h, 0, 1) = 0.0;
    if (m.y_only) {
        for (Coeff c : kAllCoeffs) {
            t.at(c, 1, 0) = 0.0;
            t.at(c, 2, 0) = 0.0;
            t.at(c, 1, 1) = 0.0;
        }
    }
    t.validate();
    return t;
}

}  // namespace detail

/// Taylor table at (xbar, ybar). Uses the model's analytic derivatives when present.
inline TaylorTable taylor_table(const LSVModel& m, double xbar, double ybar, int order = 2) {
    if (order < 0 || order > 2) throw ConfigError("taylor_table: order must be 0, 1 or 2");
    validate(m);
    (void)grouped_coefficients(m, xbar, ybar);  // domain and positivity checks
    const DerivativeTable raw = m.derivatives ? m.derivatives(xbar, ybar) : detail::fd_derivatives(m, xbar, ybar);
    return detail::normalise(m, raw, xbar, ybar, order);
}

/// Same as taylor_table but always takes the finite-difference path.
inline TaylorTable taylor_table_fd(const LSVModel& m, double xbar, double ybar, int order = 2) {
    if (order < 0 || order > 2) throw ConfigError("taylor_table: order must be 0, 1 or 2");
    validate(m);
    return detail::normalise(m, detail::fd_derivatives(m, xbar, ybar), xbar, ybar, order);
}

// ---------------------------------------------------------------------------
// Builtin models
// ---------------------------------------------------------------------------

/// Affine Sharpe ratio lambda(x, y) = l0 + lx*x + ly*y.
struct SharpeRatio {
    double l0 = 0.0;
    double lx = 0.0;
    double ly = 0.0;

    double operator()(double x, double y) const { return l0 + lx * x + ly * y; }
};

/// Heston under P with Sharpe ratio lambda. Under the minimal martingale measure
/// the factor drift is kappa*(theta - y) whatever lambda is.
inline LSVModel heston_model(double delta, double theta, double kappa, double rho, SharpeRatio lambda = {},
                             bool zero_h01 = false) {
    if (!(delta > 0.0) || !(theta > 0.0) || !(kappa > 0.0))
        throw ConfigError("heston: delta, theta and kappa must be > 0");
    if (!(rho >= -1.0 && rho <= 1.0)) throw ConfigError("heston: rho must lie in [-1, 1]");
    LSVModel m;
    m.name = "heston";
    m.rho = rho;
    m.domain.y_lo = 0.0;
    m.zero_h01 = zero_h01;
    m.mu = [lambda](double x, double y) { return lambda(x, y) * std::sqrt(std::max(y, 0.0)); };
    m.sigma = [](double, double y) { return std::sqrt(std::max(y, 0.0)); };
    m.c = [=](double x, double y) {
        return kappa * (theta - y) + rho * delta * lambda(x, y) * std::sqrt(std::max(y, 0.0));
    };
    m.beta = [delta](double, double y) { return delta * std::sqrt(std::max(y, 0.0)); };
    m.grouped_closed_form = [=](double x, double y) {
        const double lam = lambda(x, y);
        return GroupedCoeffs{0.5 * y, 0.5 * delta * delta * y, kappa * (theta - y), rho * delta * y,
                             0.5 * lam * lam};
    };
    m.derivatives = [=](double x, double y) {
        const double lam = lambda(x, y);
        DerivativeTable d{};
        d[0] = {0.5 * y, 0.0, 0.5, 0.0, 0.0, 0.0};
        d[1] = {0.5 * delta * delta * y, 0.0, 0.5 * delta * delta, 0.0, 0.0, 0.0};
        d[2] = {kappa * (theta - y), 0.0, -kappa, 0.0, 0.0, 0.0};
        d[3] = {rho * delta * y, 0.0, rho * delta, 0.0, 0.0, 0.0};
        d[4] = {0.5 * lam * lam, lam * lambda.lx, lam * lambda.ly, lambda.lx * lambda.lx, lambda.lx * lambda.ly,
                lambda.ly * lambda.ly};
        return d;
    };
    m.y_only = (lambda.lx == 0.0);
    return m;
}

/// Heston with an arbitrary Sharpe-ratio function; Taylor tables then come from
/// finite differences.
inline LSVModel heston_model(double delta, double theta, double kappa, double rho,
                             std::function<double(double, double)> lambda_fn, bool zero_h01 = false) {
    LSVModel m = heston_model(delta, theta, kappa, rho, SharpeRatio{}, zero_h01);
    m.mu = [lambda_fn](double x, double y) { return lambda_fn(x, y) * std::sqrt(std::max(y, 0.0)); };
    m.c = [=](double x, double y) {
        return kappa * (theta - y) + rho * delta * lambda_fn(x, y) * std::sqrt(std::max(y, 0.0));
    };
    m.grouped_closed_form = [=](double x, double y) {
        const double lam = lambda_fn(x, y);
        return GroupedCoeffs{0.5 * y, 0.5 * delta * delta * y, kappa * (theta - y), rho * delta * y,
                             0.5 * lam * lam};
    };
    m.derivatives = nullptr;
    m.y_only = false;
    return m;
}

/// Reciprocal Heston: Y = mu^2 (1 - rho^2) / (2 R) with R a CIR process
/// dR = a (kappa - R) dt + b sqrt(R) dW.
inline LSVModel reciprocal_heston_model(double a, double b, double kappa, double mu, double rho) {
    if (!(a > 0.0) || !(kappa > 0.0) || !(b >= 0.0))
        throw ConfigError("reciprocal_heston: a, kappa must be > 0 and b >= 0");
    if (mu == 0.0 || !std::isfinite(mu)) throw ConfigError("reciprocal_heston: mu must be non-zero");
    if (!(std::abs(rho) < 1.0)) throw ConfigError("reciprocal_heston: |rho| must be < 1");
    if (2.0 * a * kappa < b * b)
        throw ConfigError("reciprocal_heston: Feller condition 2*a*kappa >= b^2 violated (2*a*kappa = " +
                          std::to_string(2.0 * a * kappa) + ", b^2 = " + std::to_string(b * b) + ")");
    const double one_m_r2 = 1.0 - rho * rho;
    const double K = std::sqrt(2.0 / one_m_r2) * b / mu;
    const double B = 2.0 * (b * b - a * kappa) / (mu * mu * one_m_r2);
    const double Af = a + rho * K * mu;  // linear part of f = c - rho*beta*lambda

    LSVModel m;
    m.name = "reciprocal_heston";
    m.rho = rho;
    m.domain.y_lo = 0.0;
    m.y_only = true;
    m.mu = [mu](double, double) { return mu; };
    m.sigma = [](double, double y) { return std::sqrt(std::max(y, 0.0)); };
    m.c = [=](double, double y) { return a * y + B * y * y; };
    m.beta = [K](double, double y) {
        const double yp = std::max(y, 0.0);
        return -K * yp * std::sqrt(yp);
    };
    m.grouped_closed_form = [=](double, double y) {
        const double yp = std::max(y, 0.0);
        return GroupedCoeffs{0.5 * yp, 0.5 * K * K * yp * yp * yp, Af * yp + B * yp * yp, -rho * K * yp * yp,
                             yp > 0.0 ? 0.5 * mu * mu / yp : 0.0};
    };
    m.derivatives = [=](double, double y) {
        DerivativeTable d{};
        d[0] = {0.5 * y, 0.0, 0.5, 0.0, 0.0, 0.0};
        d[1] = {0.5 * K * K * y * y * y, 0.0, 1.5 * K * K * y * y, 0.0, 0.0, 3.0 * K * K * y};
        d[2] = {Af * y + B * y * y, 0.0, Af + 2.0 * B * y, 0.0, 0.0, 2.0 * B};
        d[3] = {-rho * K * y * y, 0.0, -2.0 * rho * K * y, 0.0, 0.0, -2.0 * rho * K};
        d[4] = {0.5 * mu * mu / y, 0.0, -0.5 * mu * mu / (y * y), 0.0, 0.0, mu * mu / (y * y * y)};
        return d;
    };
    return m;
}

/// Constant coefficients: the zeroth-order problem is exact.
inline LSVModel constant_model(double sigma, double beta, double c, double mu, double rho) {
    if (!(sigma > 0.0)) throw ConfigError("constant model: sigma must be > 0");
    LSVModel m;
    m.name = "constant";
    m.rho = rho;
    m.y_only = true;
    m.mu = [mu](double, double) { return mu; };
    m.sigma = [sigma](double, double) { return sigma; };
    m.c = [c](double, double) { return c; };
    m.beta = [beta](double, double) { return beta; };
    const double lam = mu / sigma;
    const GroupedCoeffs gc{0.5 * sigma * sigma, 0.5 * beta * beta, c - rho * beta * lam, rho * sigma * beta,
                           0.5 * lam * lam};
    m.grouped_closed_form = [gc](double, double) { return gc; };
    m.derivatives = [gc](double, double) {
        DerivativeTable d{};
        for (Coeff k : kAllCoeffs) d[static_cast<int>(k)][0] = gc[k];
        return d;
    };
    validate(m);
    return m;
}

}  // namespace indiff
