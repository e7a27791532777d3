#include <cmath>

#include <gtest/gtest.h>

#include "indiff/black_scholes.hpp"
#include "indiff/oracles/fd2d.hpp"
#include "indiff/oracles/heston_exact.hpp"
#include "indiff/oracles/monte_carlo.hpp"
#include "indiff/traded.hpp"
#include "tables.hpp"

using namespace indiff;

namespace {

Fd2dParams small_grid(int nx, int ny, int nt) {
    Fd2dParams p;
    p.x_lo = -0.6;
    p.x_hi = 0.6;
    p.y_lo = 0.0;
    p.y_hi = 0.2;
    p.nx = nx;
    p.ny = ny;
    p.nt = nt;
    p.richardson = false;
    return p;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// sigma depends on x only; the factor is pure noise for the traded claim.
LSVModel local_vol_model() {
    LSVModel m;
    m.name = "local-vol";
    m.rho = -0.5;
    m.mu = [](double x, double) { return 0.05 + 0.02 * x; };
    m.sigma = [](double x, double) { return 0.2 + 0.05 * std::tanh(x); };
    m.c = [](double, double y) { return 1.0 * (0.04 - y); };
    m.beta = [](double, double) { return 0.3; };
    return m;
}

}  // namespace

TEST(TradedFd, ZeroSharpeRatioGivesZeroEta) {
    const LSVModel m = heston_model(0.2, 0.04, 1.15, -0.4);
    const GridSolution eta = solve_eta_fd(m, 0.25, small_grid(41, 21, 40));
    EXPECT_EQ(max_abs(eta.values), 0.0);
}

TEST(TradedFd, ConstantSharpeRatioGivesLinearEta) {
    const LSVModel m = constant_model(0.2, 0.3, 0.1, 0.05, -0.5);
    const double h = 0.5 * (0.05 / 0.2) * (0.05 / 0.2);
    const double tau = 0.5;
    Fd2dParams p = small_grid(21, 21, 200);
    p.y_lo = -0.5;
    p.y_hi = 0.5;
    const GridSolution eta = solve_eta_fd(m, tau, p);
    for (double v : eta.values) EXPECT_NEAR(v, -tau * h, 1e-8);
}

TEST(TradedFd, LocalVolatilityHasNoSpread) {
    const LSVModel m = local_vol_model();
    const TradedFdResult r = solve_traded_fd(m, 0.0, 0.25, {25.0, -25.0}, small_grid(81, 21, 200));
    double diff = 0.0;
    for (std::size_t i = 0; i < r.u[0].values.size(); ++i)
        diff = std::max(diff, std::abs(r.u[0].values[i] - r.u[1].values[i]));
    EXPECT_LT(diff, 1e-10);
    EXPECT_GT(r.u[0].interpolate(0.0, 0.04), 0.03);
}

TEST(TradedFd, BuyerBelowSellerInHeston) {
    const LSVModel m = testing_tables::heston_affine();
    const TradedFdResult r = solve_traded_fd(m, 0.0, 0.25, {25.0, -25.0}, small_grid(81, 41, 400));
    for (double y : {0.02, 0.04, 0.08})
        for (double x : {-0.1, 0.0, 0.1}) EXPECT_LT(r.u[0].interpolate(x, y), r.u[1].interpolate(x, y)) << x << " " << y;
}

TEST(TradedFd, SpatialOrderOnSmoothProblem) {
    const LSVModel m = testing_tables::heston_affine();
    std::vector<double> v;
    for (int level = 0; level < 3; ++level) {
        const int s = 1 << level;
        Fd2dParams p = small_grid(20 * s + 1, 10 * s + 1, 50 * s);
        p.y_lo = 0.01;
        p.y_hi = 0.21;
        v.push_back(solve_eta_fd(m, 0.25, p).interpolate(0.0, 0.05));
    }
    const double order = std::log2(std::abs(v[0] - v[1]) / std::abs(v[1] - v[2]));
    EXPECT_GE(order, 1.8) << v[0] << " " << v[1] << " " << v[2];
}

TEST(TradedFd, RichardsonEstimateReported) {
    const LSVModel m = testing_tables::heston_affine();
    Fd2dParams p = small_grid(41, 21, 100);
    p.richardson = true;
    const TradedFdResult r = solve_traded_fd(m, 0.0, 0.25, {25.0}, p);
    ASSERT_EQ(r.u_coarse.size(), 1u);
    EXPECT_GT(r.u[0].richardson_error, 0.0);
    EXPECT_GE(r.u_at(0, 0.0, 0.04).richardson, 0.0);
    p.nx = 40;
    EXPECT_THROW(solve_traded_fd(m, 0.0, 0.25, {25.0}, p), ConfigError);
}

TEST(HestonExact, VanishingVolOfVolIsBlackScholes) {
    const double theta = 0.04;
    for (double k : {-0.2, 0.0, 0.15})
        for (double tau : {0.25, 1.0}) {
            const double bs = bs_call(0.0, 0.0, std::sqrt(theta), k, tau);
            const double d1 = heston_call_exact(1e-5, theta, 1.15, -0.4, 0.0, theta, k, tau) - bs;
            const double d2 = heston_call_exact(1e-6, theta, 1.15, -0.4, 0.0, theta, k, tau) - bs;
            EXPECT_LT(std::abs(d1), 1e-6) << k << " " << tau;
            // the remaining gap is the first-order vol-of-vol correction
            EXPECT_NEAR(d1 / d2, 10.0, 0.5) << k << " " << tau;
        }
}

TEST(HestonExact, DeepInTheMoney) {
    EXPECT_NEAR(heston_call_exact(0.2, 0.04, 1.15, -0.4, 0.0, 0.04, -4.0, 0.25), 1.0 - std::exp(-4.0), 1e-9);
    EXPECT_THROW(heston_call_exact(0.0, 0.04, 1.15, -0.4, 0.0, 0.04, 0.0, 0.25), ConfigError);
}

TEST(MonteCarlo, ConstantVolatilityMatchesBlackScholes) {
    const LSVModel m = constant_model(0.25, 0.3, 0.1, 0.05, -0.5);
    MCOptions o;
    o.paths = 200'000;
    o.steps = 4;
    o.seed = 11;
    for (double k : {-0.2, 0.0, 0.2}) {
        const MCResult r = mc_linear_price(m, call_payoff(k), 0.0, 0.0, 0.0, 1.0, o);
        EXPECT_LE(std::abs(r.price - bs_call(0.0, 0.0, 0.25, k, 1.0)), 3.0 * r.standard_error) << k;
    }
}

TEST(MonteCarlo, SeedAndThreadDeterminism) {
    const LSVModel m = heston_model(0.2, 0.04, 1.15, -0.4);
    MCOptions o;
    o.paths = 20'000;
    o.steps = 20;
    o.seed = 5;
    const MCResult a = mc_linear_price(m, call_payoff(0.0), 0.0, 0.0, 0.04, 0.25, o);
    const MCResult b = mc_linear_price(m, call_payoff(0.0), 0.0, 0.0, 0.04, 0.25, o);
    o.jobs = 3;
    const MCResult c = mc_linear_price(m, call_payoff(0.0), 0.0, 0.0, 0.04, 0.25, o);
    o.seed = 6;
    const MCResult d = mc_linear_price(m, call_payoff(0.0), 0.0, 0.0, 0.04, 0.25, o);
    EXPECT_EQ(a.price, b.price);
    EXPECT_EQ(a.standard_error, b.standard_error);
    EXPECT_EQ(a.price, c.price);
    EXPECT_NE(a.price, d.price);
}

TEST(OracleTriangle, ExactMonteCarloAndFiniteDifference) {
    const LSVModel m = heston_model(0.2, 0.04, 1.15, -0.4);
    const double tau = 0.25;
    MCOptions o;
    o.paths = 200'000;
    o.steps = 100;
    o.seed = 3;
    Fd2dParams p = small_grid(161, 81, 400);
    p.richardson = true;
    for (double k : {-0.1, 0.0, 0.1}) {
        const double exact = heston_call_exact(0.2, 0.04, 1.15, -0.4, 0.0, 0.04, k, tau);
        const MCResult mc = mc_linear_price(m, call_payoff(k), 0.0, 0.0, 0.04, tau, o);
        const TradedFdResult fd = solve_traded_fd(m, k, tau, {1e-8}, p);
        const auto u = fd.u_at(0, 0.0, 0.04);
        // 100 Euler steps leave a bias well under 1e-4 at this maturity.
        EXPECT_LE(std::abs(mc.price - exact), 3.0 * mc.standard_error + 1e-4) << k;
        EXPECT_LE(std::abs(u.value - exact), 3.0 * u.richardson + 2e-4) << k;
        EXPECT_LE(std::abs(u.value - mc.price), 3.0 * mc.standard_error + 3.0 * u.richardson + 3e-4) << k;
    }
}

TEST(OracleTriangle, LinearExpansionAgainstMonteCarlo) {
    const LSVModel m = testing_tables::heston_affine();
    const TaylorTable t = taylor_table(m, 0.0, 0.04, 2);
    MCOptions o;
    o.paths = 400'000;
    o.steps = 100;
    o.seed = 9;
    const MCResult mc = mc_linear_price(m, call_payoff(0.0), 0.0, 0.0, 0.04, 0.25, o);
    const PriceExpansion pe = u_terms(t, CallSpec{0.0, 0.25, 0.0}, IndifferenceSetting{25.0, 0.0, 0.04});
    EXPECT_LE(std::abs(pe.qbar(2) - mc.price), 3.0 * mc.standard_error + 1e-4);
    EXPECT_LT(std::abs(pe.qbar(2) - mc.price), std::abs(pe.qbar(0) - mc.price));
}
