#pragma once

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "indiff/error.hpp"

namespace indiff {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

/// Golub-Welsch for a symmetric Jacobi matrix with zero diagonal.
inline QuadratureRule golub_welsch(int n, const std::vector<double>& offdiag, double mu0) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n > 1 ? n - 1 : 0);
    for (int k = 0; k + 1 < n; ++k) sub[k] = offdiag[static_cast<std::size_t>(k)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericError("Golub-Welsch eigen-decomposition failed");
    QuadratureRule r;
    r.nodes.resize(static_cast<std::size_t>(n));
    r.weights.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        r.nodes[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
        const double v = es.eigenvectors()(0, k);
        r.weights[static_cast<std::size_t>(k)] = mu0 * v * v;
    }
    return r;
}

}  // namespace detail

/// Gauss-Hermite rule for E[f(Z)], Z ~ N(0, 1). Rules are cached; thread-safe.
inline const QuadratureRule& gauss_hermite(int n) {
    static std::mutex mtx;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    if (n < 1) throw Error("gauss_hermite: n must be >= 1");
    std::vector<double> off(static_cast<std::size_t>(n));
    for (int k = 1; k < n; ++k) off[static_cast<std::size_t>(k - 1)] = std::sqrt(static_cast<double>(k));
    return cache.emplace(n, detail::golub_welsch(n, off, 1.0)).first->second;
}

/// Gauss-Legendre rule on [-1, 1]. Rules are cached; thread-safe.
inline const QuadratureRule& gauss_legendre(int n) {
    static std::mutex mtx;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    if (n < 1) throw Error("gauss_legendre: n must be >= 1");
    std::vector<double> off(static_cast<std::size_t>(n));
    for (int k = 1; k < n; ++k) off[static_cast<std::size_t>(k - 1)] = k / std::sqrt(4.0 * k * k - 1.0);
    return cache.emplace(n, detail::golub_welsch(n, off, 2.0)).first->second;
}

/// Adaptive Gauss-Kronrod on [a, b] (b may be +infinity). Throws QuadratureError when the
/// error estimate exceeds max(abs_tol, rel_tol * |value|).
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-12, double rel_tol = 1e-12,
                 double* error_out = nullptr) {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, rel_tol, &err);
    if (error_out) *error_out = err;
    if (!std::isfinite(v)) throw QuadratureError("adaptive quadrature produced a non-finite value", v, err);
    if (err > std::max(abs_tol, rel_tol * std::abs(v)))
        throw QuadratureError("adaptive quadrature did not converge", v, err);
    return v;
}

struct Gaussian2 {
    std::array<double, 2> mean{0.0, 0.0};
    /// Symmetric positive semi-definite covariance (c00, c01, c11).
    double c00 = 1.0, c01 = 0.0, c11 = 1.0;
};

/// E[f(V)] for V ~ N(mean, C) by tensor Gauss-Hermite, doubling the order until
/// two successive estimates differ by less than tol.
template <class F>
double gaussian_expectation(F&& f, const Gaussian2& g, double tol = 1e-12, int max_order = 256) {
    if (!(g.c00 >= 0.0) || !(g.c11 >= 0.0)) throw Error("gaussian_expectation: negative variance");
    const double l00 = std::sqrt(g.c00);
    const double l10 = l00 > 0.0 ? g.c01 / l00 : 0.0;
    const double l11 = std::sqrt(std::max(g.c11 - l10 * l10, 0.0));
    auto estimate = [&](int n) {
        const QuadratureRule& r = gauss_hermite(n);
        const int nx = l00 > 0.0 ? n : 1;
        const int ny = l11 > 0.0 ? n : 1;
        double acc = 0.0;
        for (int a = 0; a < nx; ++a) {
            const double za = nx > 1 ? r.nodes[static_cast<std::size_t>(a)] : 0.0;
            const double wa = nx > 1 ? r.weights[static_cast<std::size_t>(a)] : 1.0;
            for (int b = 0; b < ny; ++b) {
                const double zb = ny > 1 ? r.nodes[static_cast<std::size_t>(b)] : 0.0;
                const double wb = ny > 1 ? r.weights[static_cast<std::size_t>(b)] : 1.0;
                acc += wa * wb * f(g.mean[0] + l00 * za, g.mean[1] + l10 * za + l11 * zb);
            }
        }
        return acc;
    };
    int n = 8;
    double prev = estimate(n);
    while (n < max_order) {
        n *= 2;
        const double cur = estimate(n);
        if (std::abs(cur - prev) < tol) return cur;
        prev = cur;
    }
    throw QuadratureError("Gauss-Hermite expectation did not converge", prev, tol);
}

/// E[f(m + s Z)], Z ~ N(0, 1), with the same order-doubling policy.
template <class F>
double gaussian_expectation_1d(F&& f, double m, double s, double tol = 1e-12, int max_order = 512) {
    auto estimate = [&](int n) {
        const QuadratureRule& r = gauss_hermite(n);
        double acc = 0.0;
        for (std::size_t a = 0; a < r.nodes.size(); ++a) acc += r.weights[a] * f(m + s * r.nodes[a]);
        return acc;
    };
    int n = 8;
    double prev = estimate(n);
    while (n < max_order) {
        n *= 2;
        const double cur = estimate(n);
        if (std::abs(cur - prev) < tol) return cur;
        prev = cur;
    }
    throw QuadratureError("Gauss-Hermite expectation did not converge", prev, tol);
}

}  // namespace indiff
