#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "indiff/implied_vol.hpp"
#include "reference.hpp"
#include "tables.hpp"

using namespace indiff;
using testing_tables::random_table;

namespace {

TaylorTable local_vol_table(double a0, double a10, double a20) {
    TaylorTable t;
    t.xbar = 0.0;
    t.ybar = 0.04;
    t.rho = -0.5;
    t.at(Coeff::a, 0, 0) = a0;
    t.at(Coeff::a, 1, 0) = a10;
    t.at(Coeff::a, 2, 0) = a20;
    t.at(Coeff::b, 0, 0) = 0.02;
    t.at(Coeff::f, 0, 0) = 0.3;
    t.at(Coeff::g, 0, 0) = -0.5 * 2.0 * std::sqrt(a0 * 0.02);
    t.at(Coeff::h, 0, 0) = 0.1;
    return t;
}

TaylorTable heston_table(bool zero_h01) {
    const LSVModel m = heston_model(0.2, 0.04, 1.15, -0.4, SharpeRatio{0.5, 0.0, 5.0}, zero_h01);
    return taylor_table(m, 0.0, 0.04, 2);
}

}  // namespace

TEST(ImpliedVolClosedForm, FirstOrderMoneynessTerm) {
    const TaylorTable t = local_vol_table(0.02, 0.1, 0.0);
    const IVExpansion e = iv_terms_closed_form(t, CallSpec{0.1, 0.5, 0.0}, IndifferenceSetting{0.0, 0.0, 0.04});
    EXPECT_DOUBLE_EQ(e.sigma0, 0.2);
    EXPECT_NEAR(e.sigma_10, 0.025, 1e-15);
    EXPECT_EQ(e.sigma_01, 0.0);
}

TEST(ImpliedVolClosedForm, ConstantModelIsFlat) {
    const LSVModel m = constant_model(0.2, 0.3, 0.1, 0.05, -0.5);
    const IndifferenceSetting s{10.0, 0.0, 0.04};
    const TaylorTable t = taylor_table(m, 0.0, 0.04, 2);
    for (double T : {0.05, 0.5, 2.0})
        for (double k : {-0.3, 0.0, 0.2}) {
            const IVExpansion e = iv_terms_closed_form(t, CallSpec{k, T, 0.0}, s);
            EXPECT_NEAR(e.ivbar(2), 0.2, 1e-15);
            EXPECT_EQ(e.sigma1, 0.0);
            EXPECT_EQ(e.sigma2(), 0.0);
        }
}

TEST(ImpliedVolClosedForm, RejectsOffPointExpansion) {
    const TaylorTable t = local_vol_table(0.02, 0.1, 0.0);
    EXPECT_THROW(iv_terms_closed_form(t, CallSpec{0.0, 1.0, 0.0}, IndifferenceSetting{0.0, 0.01, 0.04}), ConfigError);
    EXPECT_THROW(iv_terms_closed_form(t, CallSpec{0.0, 1.0, 0.0}, IndifferenceSetting{0.0, 0.0, 0.05}), ConfigError);
}

TEST(ImpliedVolClosedForm, NoIndifferenceTermWithoutUnhedgeableRisk) {
    TaylorTable t = heston_table(false);
    t.rho = 1.0;
    const IVExpansion e = iv_terms_closed_form(t, CallSpec{0.05, 0.5, 0.0}, IndifferenceSetting{25.0, 0.0, 0.04});
    EXPECT_EQ(e.sigma2_ind, 0.0);
}

// Short-maturity local-vol implied vol is the harmonic mean of sigma between x and k.
TEST(ImpliedVolClosedForm, ShortMaturityHarmonicMean) {
    const double a0 = 0.02, a10 = 0.05, a20 = 0.4;
    const TaylorTable t = local_vol_table(a0, a10, a20);
    auto sigma = [&](double x) { return std::sqrt(2.0 * (a0 + a10 * x + a20 * x * x)); };
    double prev = 0.0;
    for (double L : {0.04, 0.02, 0.01}) {
        const double inv = ref::integrate([&](double s) { return 1.0 / sigma(s * L); }, 0.0, 1.0, 1e-15);
        const IVExpansion e = iv_terms_closed_form(t, CallSpec{L, 1e-10, 0.0}, IndifferenceSetting{0.0, 0.0, 0.04});
        const double err = std::abs(e.sigma0 + e.sigma_10 + e.sigma_20 - 1.0 / inv);
        if (prev > 0.0) {
            EXPECT_GT(prev / err, 6.0) << L;
        }
        prev = err;
    }
    EXPECT_LT(prev, 1e-5);
}

TEST(ImpliedVolClosedForm, MatchesGenericRecursion) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> ut(0.05, 2.0), uL(-0.3, 0.3), ug(-30.0, 30.0);
    double worst = 0.0;
    for (int n = 0; n < 200; ++n) {
        const double x = 0.1 * (n % 3), y = 0.04;
        const TaylorTable t = random_table(rng, x, y);
        const TradedOperators ops = traded_operators(t);
        const double tau = ut(rng), L = uL(rng);
        const CallSpec spec{x + L, tau, 0.0};
        const IndifferenceSetting s{ug(rng), x, y};
        const IVExpansion c = iv_terms_closed_form(t, spec, s);
        const IVExpansion g = iv_terms_generic(u_terms(t, ops, spec, s), t.sigma0(), spec, x);
        const double scale = 1.0 + std::abs(c.sigma1) + std::abs(c.sigma2());
        EXPECT_NEAR(c.sigma1, g.sigma1, 1e-10 * scale) << n;
        EXPECT_NEAR(c.sigma2_lin, g.sigma2_lin, 1e-10 * scale) << n;
        EXPECT_NEAR(c.sigma2_ind, g.sigma2_ind, 1e-10 * scale) << n;
        worst = std::max(worst, std::abs(c.ivbar(2) - g.ivbar(2)) / scale);
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(ImpliedVolClosedForm, HestonMatchesGenericRecursion) {
    const TaylorTable t = heston_table(false);
    const TradedOperators ops = traded_operators(t);
    for (double tau : {0.1, 0.4, 1.0})
        for (double L : {-0.2, -0.1, 0.0, 0.1, 0.2}) {
            const CallSpec spec{L, tau, 0.0};
            const IndifferenceSetting s{25.0, 0.0, 0.04};
            const IVExpansion c = iv_terms_closed_form(t, spec, s);
            const IVExpansion g = iv_terms_generic(u_terms(t, ops, spec, s), t.sigma0(), spec, 0.0);
            EXPECT_NEAR(c.ivbar(2), g.ivbar(2), 1e-10);
        }
}

TEST(ImpliedVolGeneric, SecondOrderSplitIsLinear) {
    const TaylorTable t = testing_tables::busy_table();
    const TaylorTable local = [&] {
        TaylorTable c = t;
        c.xbar = 0.0;
        c.ybar = 0.04;
        return c;
    }();
    const TradedOperators ops = traded_operators(local);
    const CallSpec spec{0.05, 0.5, 0.0};
    const IndifferenceSetting s{15.0, 0.0, 0.04};
    const PriceExpansion p = u_terms(local, ops, spec, s);
    const double s0 = local.sigma0();
    const IVExpansion full = iv_terms_generic(p, s0, spec, 0.0);
    PriceExpansion lin_only = p, ind_only = p;
    lin_only.u2_ind = lin_only.u2_ind_eta = lin_only.u2_ind_gamma = 0.0;
    ind_only.u2_lin = 0.0;
    ind_only.u1 = 0.0;
    const IVExpansion a = iv_terms_generic(lin_only, s0, spec, 0.0);
    const IVExpansion b = iv_terms_generic(ind_only, s0, spec, 0.0);
    const IVExpansion c = iv_terms_closed_form(local, spec, s);
    EXPECT_NEAR(a.sigma2(), c.sigma_20 + c.sigma_11 + c.sigma_02, 1e-12);
    EXPECT_NEAR(b.sigma2(), c.sigma2_ind, 1e-12);
    EXPECT_NEAR(a.sigma2() + b.sigma2(), full.sigma2(), 1e-15);
}

TEST(ImpliedVolGeneric, ZeroCorrectionsGiveZeroTerms) {
    const IVExpansion e = iv_terms_generic(PriceExpansion{0.08, 0.0, 0.0, 0.0}, 0.2, CallSpec{0.0, 1.0, 0.0}, 0.0);
    EXPECT_EQ(e.sigma1, 0.0);
    EXPECT_EQ(e.sigma2(), 0.0);
}

TEST(ImpliedVolGeneric, VanishingVegaIsReported) {
    EXPECT_THROW(iv_terms_generic(PriceExpansion{}, 0.2, CallSpec{5.0, 1e-4, 0.0}, 0.0), NumericError);
}

// Indifference vol term against direct quadrature of its time integral.
TEST(ImpliedVolClosedForm, IndifferenceTermAgainstDirectIntegral) {
    const TaylorTable t = heston_table(true);
    const double s0 = t.sigma0(), a01 = t.at(Coeff::a, 0, 1);
    const double pref = t.one_minus_rho2() * t.at(Coeff::b, 0, 0);
    const double gn = 25.0;
    for (double tau : {0.05, 0.25, 1.0})
        for (double L : {-0.15, 0.0, 0.1}) {
            const IVExpansion e = iv_terms_closed_form(t, CallSpec{L, tau, 0.0}, IndifferenceSetting{gn, 0.0, 0.04});
            EXPECT_EQ(e.sigma2_ind_eta, 0.0);
            const double m2 = (L + 0.5 * s0 * s0 * tau) * (L + 0.5 * s0 * s0 * tau);
            const double I = ref::integrate_ts(
                [&](double s) {
                    return std::pow(tau - s, 1.5) / std::sqrt(tau + s) * std::exp(-m2 / (s0 * s0 * (tau + s)));
                },
                0.0, tau);
            const double expected = -gn * pref * a01 * a01 / (s0 * s0 * std::sqrt(2.0 * std::numbers::pi)) *
                                    std::exp(L) / std::sqrt(tau) * std::exp(m2 / (2.0 * s0 * s0 * tau)) * I;
            EXPECT_NEAR(e.sigma2_ind, expected, 1e-10 * std::abs(expected)) << tau << " " << L;
        }
}

TEST(ImpliedVolSurface, SellerAboveBuyerAndSymmetricSpread) {
    const LSVModel m = heston_model(0.2, 0.04, 1.15, -0.4, SharpeRatio{0.5, 0.0, 5.0});
    const IndifferenceSetting s{25.0, 0.0, 0.04};
    const std::vector<double> ks{-0.2, -0.1, 0.0, 0.1, 0.2}, Ts{0.1, 0.5, 1.0};
    const auto buy = surface(m, s, ks, Ts, Side::buyer);
    const auto sell = surface(m, s, ks, Ts, Side::seller);
    ASSERT_EQ(buy.size(), sell.size());
    for (std::size_t i = 0; i < buy.size(); ++i) {
        ASSERT_TRUE(buy[i].error.empty());
        EXPECT_LT(buy[i].iv.ivbar(2), sell[i].iv.ivbar(2));
        EXPECT_LT(buy[i].iv.sigma2_ind_gamma, 0.0);
        EXPECT_DOUBLE_EQ(buy[i].half_spread, sell[i].half_spread);
        EXPECT_DOUBLE_EQ(buy[i].iv.ivbar(2) - buy[i].iv.sigma2_ind_gamma,
                         sell[i].iv.ivbar(2) - sell[i].iv.sigma2_ind_gamma);
        EXPECT_NEAR(sell[i].iv.ivbar(2) - buy[i].iv.ivbar(2), 2.0 * buy[i].half_spread, 1e-15);
    }
}

TEST(ImpliedVolSurface, LinearPartIndependentOfRiskAversion) {
    const TaylorTable t = heston_table(false);
    const CallSpec spec{0.1, 0.5, 0.0};
    const IVExpansion e1 = iv_terms_closed_form(t, spec, IndifferenceSetting{5.0, 0.0, 0.04});
    const IVExpansion e2 = iv_terms_closed_form(t, spec, IndifferenceSetting{50.0, 0.0, 0.04});
    EXPECT_DOUBLE_EQ(e1.ivbar(2) - e1.sigma2_ind_gamma, e2.ivbar(2) - e2.sigma2_ind_gamma);
    EXPECT_NEAR(e2.sigma2_ind_gamma, 10.0 * e1.sigma2_ind_gamma, 1e-15);
}

TEST(ImpliedVolSurface, IndifferenceTermDecaysWithMaturity) {
    for (bool zero : {true, false}) {
        const TaylorTable t = heston_table(zero);
        for (double L : {-0.1, 0.05, 0.1}) {
            double prev = HUGE_VAL;
            for (int j = 1; j <= 8; ++j) {
                const double tau = std::ldexp(1.0, -j);
                const IVExpansion e = iv_terms_closed_form(t, CallSpec{L, tau, 0.0}, IndifferenceSetting{25.0, 0.0, 0.04});
                EXPECT_LT(std::abs(e.sigma2_ind), prev) << L << " " << j;
                prev = std::abs(e.sigma2_ind);
            }
        }
    }
}

TEST(ImpliedVolSurface, ConstantModelRowsAreFlat) {
    const LSVModel m = constant_model(0.25, 0.3, 0.1, 0.05, -0.5);
    const auto rows = surface(m, IndifferenceSetting{10.0, 0.0, 0.04}, {-0.1, 0.1}, {0.25, 1.0}, Side::seller);
    for (const auto& r : rows) EXPECT_NEAR(r.iv.ivbar(2), 0.25, 1e-15);
}

TEST(ImpliedVolInvert, RoundTrip) {
    double worst = 0.0;
    for (double sigma : {0.05, 0.1, 0.2, 0.5, 1.0, 1.5})
        for (double L : {-1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0})
            for (double tau : {0.05, 0.25, 1.0, 5.0}) {
                const double p = bs_call(0.0, 0.0, sigma, L, tau);
                if (!(p > std::max(1.0 - std::exp(L), 0.0))) continue;
                const double got = implied_vol_invert(p, 0.0, 0.0, L, tau);
                worst = std::max(worst, std::abs(got - sigma));
                EXPECT_NEAR(got, sigma, 1e-10) << sigma << " " << L << " " << tau;
            }
    EXPECT_LT(worst, 1e-10);
}

TEST(ImpliedVolInvert, AtTheMoneyReferencePrice) {
    EXPECT_NEAR(implied_vol_invert(0.0796557, 0.0, 0.0, 0.0, 1.0), 0.2, 1e-6);
}

TEST(ImpliedVolInvert, ArbitrageBoundsRejected) {
    EXPECT_THROW(implied_vol_invert(std::exp(0.1) - 1.0, 0.0, 0.1, 0.0, 1.0), NumericError);
    EXPECT_THROW(implied_vol_invert(0.0, 0.0, -0.1, 0.0, 1.0), NumericError);
    EXPECT_THROW(implied_vol_invert(1.0, 0.0, 0.0, 0.0, 1.0), NumericError);
    try {
        implied_vol_invert(0.0, 0.0, 0.0, 0.1, 1.0);
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("lower bound"), std::string::npos);
    }
}
