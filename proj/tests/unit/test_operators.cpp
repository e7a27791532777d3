#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "indiff/gaussian.hpp"
#include "indiff/hermite.hpp"
#include "indiff/operators.hpp"
#include "reference.hpp"
#include "tables.hpp"

using namespace indiff;

namespace {

using testing_tables::busy_table;
using testing_tables::test_functions;

bool same(const WeylElement& a, const WeylElement& b) { return (a - b).is_zero(); }

/// Integer-valued random element, so products are exact in floating point.
WeylElement random_element(std::mt19937& rng) {
    std::uniform_int_distribution<int> c(-4, 4), e(0, 2), d(0, 1);
    WeylElement w;
    for (int n = 0; n < 5; ++n) {
        const int r = e(rng), p = e(rng), q = e(rng), i = d(rng), j = d(rng);
        w.add_term({r, p, q, i, j}, c(rng));
    }
    return w;
}

/// Replaces the time variable by a number.
WeylElement at_time(const WeylElement& w, double s) {
    WeylElement out;
    for (const auto& [m, c] : w.terms()) out.add_term({0, m.p, m.q, m.i, m.j}, c * WeylElement::ipow(s, m.r));
    return out;
}

}  // namespace

TEST(WeylAlgebra, LeibnizAndIdentity) {
    WeylElement expected = compose(WeylElement::xpoly(), WeylElement::dx()) + WeylElement::identity();
    EXPECT_TRUE(same(compose(WeylElement::dx(), WeylElement::xpoly()), expected));
    EXPECT_TRUE(same(commutator(WeylElement::dy(), WeylElement::ypoly()), WeylElement::identity()));
    EXPECT_TRUE(commutator(WeylElement::dx(), WeylElement::ypoly()).is_zero());
    std::mt19937 rng(3);
    const WeylElement a = random_element(rng);
    EXPECT_TRUE(same(compose(a, WeylElement::identity()), a));
    EXPECT_TRUE(same(compose(WeylElement::identity(), a), a));
}

TEST(WeylAlgebra, CompositionIsAssociative) {
    std::mt19937 rng(11);
    for (int n = 0; n < 20; ++n) {
        const WeylElement a = random_element(rng), b = random_element(rng), c = random_element(rng);
        EXPECT_TRUE(same(compose(compose(a, b), c), compose(a, compose(b, c)))) << n;
    }
}

TEST(WeylAlgebra, ShiftOperatorsCommuteExactly) {
    const TaylorTable t = busy_table();
    const WeylElement X = shift_operator_x(t), Y = shift_operator_y(t);
    EXPECT_TRUE(commutator(X, Y).is_zero());
    EXPECT_TRUE(commutator(shift_operator_x_centered(t), shift_operator_y_centered(t)).is_zero());
    // X applied to 1 is x - dt a0.
    EXPECT_DOUBLE_EQ(X.apply_to_one(0.3, 0.1, 0.0), t.xbar + 0.1 - 0.3 * t.at(Coeff::a, 0, 0));
}

TEST(WeylAlgebra, DerivativeOrderCapEnforced) {
    EXPECT_THROW(power(WeylElement::dx(), WeylElement::kMaxDerivativeOrder + 1), Error);
}

TEST(GOperator, ZeroEntriesGiveZeroElement) {
    TaylorTable t;
    t.at(Coeff::a, 0, 0) = 0.02;
    t.at(Coeff::b, 0, 0) = 0.01;
    EXPECT_TRUE(g_operator(1, t).is_zero());
    EXPECT_TRUE(g_operator(2, t).is_zero());
}

TEST(GOperator, LocalVolatilityHasNoYFactors) {
    TaylorTable t;
    t.at(Coeff::a, 0, 0) = 0.02;
    t.at(Coeff::a, 1, 0) = 0.1;
    for (const auto& [m, c] : g_operator(1, t).terms()) {
        EXPECT_EQ(m.q, 0);
        EXPECT_EQ(m.j, 0);
    }
}

TEST(GOperator, YDerivativeOnYIndependentFunction) {
    const TaylorTable t = busy_table();
    const WeylElement dyG1 = compose(WeylElement::dy(), g_operator(1, t));
    // Drop the terms that still differentiate in y; what remains must be a01 (Dx^2 - Dx).
    WeylElement kept;
    for (const auto& [m, c] : dyG1.terms())
        if (m.j == 0) kept.add_term(m, c);
    WeylElement expected = (WeylElement::monomial(1.0, {0, 0, 0, 2, 0}) - WeylElement::dx()) * t.at(Coeff::a, 0, 1);
    EXPECT_TRUE(same(kept, expected)) << kept.dump();
}

TEST(Commutation, GeneratorCommutesWithSemigroup) {
    const TaylorTable t = busy_table();
    const std::vector<std::pair<double, double>> pts{{0.05, 0.04}, {0.2, -0.05}, {-0.15, 0.1}};
    for (const auto& [name, f] : test_functions())
        for (int n : {1, 2}) {
            const double r = commutation_check(n, t, f, 0.25, pts, 1e-10);
            EXPECT_LE(r, 1e-8) << name << " n=" << n;
        }
}

TEST(Semigroup, CompositionForExponentials) {
    const TaylorTable t = busy_table();
    for (auto [al, be] : {std::pair{0.3, 0.2}, std::pair{-1.0, 0.5}, std::pair{0.7, -2.0}}) {
        auto f = [al, be](double x, double y) { return std::exp(al * x + be * y); };
        const GaussianKernelParams k1 = GaussianKernelParams::from_table(t, 0.2);
        const GaussianKernelParams k2 = GaussianKernelParams::from_table(t, 0.35);
        const GaussianKernelParams k12 = GaussianKernelParams::from_table(t, 0.55);
        const double x = 0.1, y = 0.02;
        const double nested = semigroup_apply(k1, [&](double u, double v) { return semigroup_apply(k2, f, u, v); }, x, y);
        const double direct = semigroup_apply(k12, f, x, y);
        const double a0 = t.at(Coeff::a, 0, 0), b0 = t.at(Coeff::b, 0, 0), f0 = t.at(Coeff::f, 0, 0),
                     g0 = t.at(Coeff::g, 0, 0), s = 0.55;
        const double mgf = std::exp(al * (x - a0 * s) + be * (y + f0 * s) +
                                    0.5 * s * (2.0 * a0 * al * al + 2.0 * g0 * al * be + 2.0 * b0 * be * be));
        EXPECT_LE(std::abs(nested - direct), 1e-10 * std::max(1.0, mgf));
        EXPECT_LE(std::abs(direct - mgf), 1e-10 * std::max(1.0, mgf));
    }
}

TEST(Semigroup, PolynomialShortcutMatchesGaussianMoments) {
    const TaylorTable t = busy_table();
    const GaussianKernelParams k = GaussianKernelParams::from_table(t, 0.4);
    const double x = 0.3, y = -0.1;
    const Gaussian2 g = k.at(x, y);
    const double mu = g.mean[0] - t.xbar, mv = g.mean[1] - t.ybar;
    auto poly = [&](int p, int q) { return semigroup_apply_polynomial(k, Polynomial2{{{p, q}, 1.0}}, x, y); };
    EXPECT_NEAR(poly(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(poly(1, 0), mu, 1e-14);
    EXPECT_NEAR(poly(0, 1), mv, 1e-14);
    EXPECT_NEAR(poly(2, 0), mu * mu + g.c00, 1e-14);
    EXPECT_NEAR(poly(1, 1), mu * mv + g.c01, 1e-14);
    EXPECT_NEAR(poly(0, 2), mv * mv + g.c11, 1e-14);
    EXPECT_NEAR(poly(3, 0), mu * mu * mu + 3.0 * mu * g.c00, 1e-14);
    EXPECT_NEAR(poly(2, 1), mu * mu * mv + g.c00 * mv + 2.0 * mu * g.c01, 1e-14);
    EXPECT_NEAR(poly(1, 2), mu * mv * mv + g.c11 * mu + 2.0 * mv * g.c01, 1e-14);
    EXPECT_NEAR(poly(0, 3), mv * mv * mv + 3.0 * mv * g.c11, 1e-14);
    // and the quadrature path agrees
    const double q = semigroup_apply(
        k, [&](double u, double v) { return std::pow(u - t.xbar, 2) * (v - t.ybar); }, x, y);
    EXPECT_NEAR(q, poly(2, 1), 1e-12);
}

TEST(TimeIntegral, ElementaryCases) {
    const WeylElement one = time_integral({WeylElement::dt()});
    EXPECT_DOUBLE_EQ(one.coefficient({2, 0, 0, 0, 0}), 0.5);
    EXPECT_EQ(one.size(), 1u);
    std::mt19937 rng(5);
    const WeylElement a = at_time(random_element(rng), 1.0), b = at_time(random_element(rng), 1.0);
    EXPECT_TRUE(same(time_integral({a, b}), compose(a, b).times_dt(2) * 0.5));
}

TEST(TimeIntegral, MatchesSimplexQuadrature) {
    const TaylorTable t = busy_table();
    const WeylElement G1 = g_operator(1, t), G2 = g_operator(2, t);
    const double tau = 0.7;
    const QuadratureRule& gl = gauss_legendre(12);
    auto check = [&](const WeylElement& exact_op, const std::vector<WeylElement>& f) {
        WeylElement num;
        if (f.size() == 1) {
            for (std::size_t a = 0; a < gl.nodes.size(); ++a) {
                const double s = 0.5 * tau * (gl.nodes[a] + 1.0);
                num += at_time(f[0], s) * (0.5 * tau * gl.weights[a]);
            }
        } else {
            for (std::size_t a = 0; a < gl.nodes.size(); ++a) {
                const double s2 = 0.5 * tau * (gl.nodes[a] + 1.0);
                for (std::size_t b = 0; b < gl.nodes.size(); ++b) {
                    const double s1 = 0.5 * s2 * (gl.nodes[b] + 1.0);
                    const double w = 0.25 * tau * s2 * gl.weights[a] * gl.weights[b];
                    num += compose(at_time(f[0], s1), at_time(f[1], s2)) * w;
                }
            }
        }
        const WeylElement diff = at_time(exact_op, tau) - num;
        EXPECT_LE(diff.max_abs_coefficient(), 1e-12 * std::max(1.0, num.max_abs_coefficient())) << diff.dump();
    };
    check(time_integral({G1}), {G1});
    check(time_integral({G2}), {G2});
    check(time_integral({G1, G1}), {G1, G1});
    check(time_integral({WeylElement::dt(), WeylElement::dt()}), {WeylElement::dt(), WeylElement::dt()});
}

TEST(Hermite, RecursionAndExplicitForm) {
    for (double z = -5.0; z <= 5.0; z += 0.25)
        for (int n = 1; n < 8; ++n) {
            const double lhs = hermite_h(n + 1, z);
            const double rhs = 2.0 * z * hermite_h(n, z) - 2.0 * n * hermite_h(n - 1, z);
            EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs))) << n << ' ' << z;
            const double ex = ref::hermite_explicit(n + 1, z);
            EXPECT_LE(std::abs(lhs - ex), 1e-12 * std::max(1.0, std::abs(ex))) << n << ' ' << z;
        }
}

TEST(Hermite, RatioMatchesDerivativesOfGammaFactor) {
    const double sigma0 = 0.2, tau = 1.0, k = 0.0, z = 0.5;
    const double s = -1.0 / (sigma0 * std::sqrt(2.0 * tau));
    EXPECT_EQ(hermite_ratio(0, z, sigma0, tau), 1.0);
    EXPECT_DOUBLE_EQ(hermite_ratio(1, z, sigma0, tau), s * 2.0 * z);
    const double x = k + 0.5 * sigma0 * sigma0 * tau + z * sigma0 * std::sqrt(2.0 * tau);
    auto D = [&](double u) { return ref::bs_gamma_factor(u, sigma0, k, tau); };
    auto third = [&](double h) { return (D(x + 2 * h) - 2 * D(x + h) + 2 * D(x - h) - D(x - 2 * h)) / (2 * h * h * h); };
    const double fd = (4.0 * third(0.0025) - third(0.005)) / 3.0;
    const double ratio = hermite_ratio(3, z, sigma0, tau);
    EXPECT_LE(std::abs(fd / D(x) - ratio), 1e-6 * std::max(1.0, std::abs(ratio)));
}
