#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

#include <json.hpp>

#include "indiff/model.hpp"

namespace indiff {

struct MCResult {
    double price = 0.0;
    double standard_error = 0.0;
    long long paths = 0;
    int steps = 0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return {{"scheme", "euler-maruyama, full truncation, antithetic pairs"},
                {"paths", paths},
                {"steps", steps},
                {"seed", seed},
                {"standard_error", standard_error},
                {"value", price}};
    }
};

struct MCOptions {
    long long paths = 1'000'000;  ///< rounded up to an even count (antithetic pairs)
    int steps = 250;
    std::uint64_t seed = 1;
    int jobs = 1;
};

/// Number of independent RNG streams. Fixed, so results do not depend on the thread count.
inline constexpr int kMonteCarloShards = 64;

/// E~[phi_i(X_T)] for several x-payoffs under the minimal martingale measure,
/// dX = -sigma^2/2 dt + sigma dW1, dY = (c - rho beta lambda) dt + beta (rho dW1 + sqrt(1 - rho^2) dW2).
/// Coefficients are evaluated at the state clamped into the model domain while the state itself
/// is left free (full truncation). One antithetic pair counts as one sample for the standard error.
inline std::vector<MCResult> mc_linear_prices(const LSVModel& m, const std::vector<std::function<double(double)>>& payoffs,
                                              double t, double x, double y, double T, const MCOptions& opt) {
    if (payoffs.empty()) throw ConfigError("Monte Carlo: no payoffs");
    if (!(T > t)) throw ConfigError("Monte Carlo: T must exceed t");
    if (opt.paths < 4 || opt.steps < 1) throw ConfigError("Monte Carlo: need paths >= 4 and steps >= 1");
    if (!m.domain.contains(x, y)) throw DomainError("Monte Carlo: initial state outside the model domain");
    const long long pairs = (opt.paths + 1) / 2;
    const double dt = (T - t) / opt.steps, sdt = std::sqrt(dt);
    const double rho = m.rho, rhob = std::sqrt(std::max(1.0 - rho * rho, 0.0));
    const std::size_t np = payoffs.size();

    struct Acc {
        std::vector<double> sum, sum2;
    };
    std::vector<Acc> acc(kMonteCarloShards, Acc{std::vector<double>(np, 0.0), std::vector<double>(np, 0.0)});

    auto run_shard = [&](int s) {
        const long long n = pairs / kMonteCarloShards + (s < pairs % kMonteCarloShards ? 1 : 0);
        std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                          static_cast<std::uint32_t>(s)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> nd;
        std::vector<double> z1(static_cast<std::size_t>(opt.steps)), z2(static_cast<std::size_t>(opt.steps));
        auto path = [&](double sign) {
            double X = x, Y = y;
            for (int k = 0; k < opt.steps; ++k) {
                const double xc = m.domain.clamp_x(X), yc = m.domain.clamp_y(Y);
                const double sig = m.sigma(xc, yc), bet = m.beta(xc, yc);
                const double f = grouped_coefficients_unchecked(m, xc, yc).f;
                const double w1 = sign * z1[static_cast<std::size_t>(k)] * sdt;
                const double w2 = sign * z2[static_cast<std::size_t>(k)] * sdt;
                X += -0.5 * sig * sig * dt + sig * w1;
                Y += f * dt + bet * (rho * w1 + rhob * w2);
            }
            return X;
        };
        Acc& a = acc[static_cast<std::size_t>(s)];
        for (long long p = 0; p < n; ++p) {
            for (int k = 0; k < opt.steps; ++k) {
                z1[static_cast<std::size_t>(k)] = nd(rng);
                z2[static_cast<std::size_t>(k)] = nd(rng);
            }
            const double xp = path(1.0), xm = path(-1.0);
            for (std::size_t i = 0; i < np; ++i) {
                const double v = 0.5 * (payoffs[i](xp) + payoffs[i](xm));
                a.sum[i] += v;
                a.sum2[i] += v * v;
            }
        }
    };

    const int jobs = std::max(1, std::min(opt.jobs, kMonteCarloShards));
    if (jobs == 1) {
        for (int s = 0; s < kMonteCarloShards; ++s) run_shard(s);
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back([&, j] {
                for (int s = j; s < kMonteCarloShards; s += jobs) run_shard(s);
            });
        for (auto& th : pool) th.join();
    }

    std::vector<MCResult> out(np);
    for (std::size_t i = 0; i < np; ++i) {
        double s1 = 0.0, s2 = 0.0;
        for (const Acc& a : acc) {
            s1 += a.sum[i];
            s2 += a.sum2[i];
        }
        const double n = static_cast<double>(pairs);
        const double mean = s1 / n;
        const double var = std::max(s2 / n - mean * mean, 0.0) * n / (n - 1.0);
        out[i].price = mean;
        out[i].standard_error = std::sqrt(var / n);
        out[i].paths = 2 * pairs;
        out[i].steps = opt.steps;
        out[i].seed = opt.seed;
        if (!std::isfinite(out[i].price)) throw NumericError("Monte Carlo: non-finite estimate");
    }
    return out;
}

inline MCResult mc_linear_price(const LSVModel& m, const std::function<double(double)>& payoff, double t, double x,
                                double y, double T, const MCOptions& opt) {
    return mc_linear_prices(m, {payoff}, t, x, y, T, opt).front();
}

/// Call payoff on e^X with log-strike k.
inline std::function<double(double)> call_payoff(double k) {
    return [k](double X) { return std::max(std::exp(X) - std::exp(k), 0.0); };
}

}  // namespace indiff
