#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "indiff/config.hpp"
#include "indiff/convergence.hpp"
#include "indiff/implied_vol.hpp"
#include "indiff/nontraded.hpp"
#include "indiff/oracles/fd1d.hpp"
#include "indiff/oracles/fd2d.hpp"
#include "indiff/oracles/heston_exact.hpp"
#include "indiff/oracles/monte_carlo.hpp"
#include "indiff/traded.hpp"

namespace indiff {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3, kExitVerification = 4 };

/// 17 significant digits, so a value read back is bit-identical.
inline std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvTable {
public:
    using Cell = std::variant<std::string, double, long long>;

    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<Cell> row) {
        if (row.size() != header_.size()) throw Error("CsvTable: row width does not match the header");
        rows_.push_back(std::move(row));
    }
    std::size_t size() const { return rows_.size(); }

    void write(std::ostream& os) const {
        write_row(os, header_);
        for (const auto& r : rows_) {
            std::vector<std::string> cells;
            for (const Cell& c : r) {
                if (const auto* s = std::get_if<std::string>(&c)) cells.push_back(*s);
                else if (const auto* d = std::get_if<double>(&c)) cells.push_back(fmt17(*d));
                else cells.push_back(std::to_string(std::get<long long>(c)));
            }
            write_row(os, cells);
        }
    }

private:
    static void write_row(std::ostream& os, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os << ',';
            const std::string& s = cells[i];
            if (s.find_first_of(",\"\n") == std::string::npos) {
                os << s;
            } else {
                os << '"';
                for (char ch : s) os << (ch == '"' ? "\"\"" : std::string(1, ch));
                os << '"';
            }
        }
        os << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Callers write into slot i only.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

struct CliOptions {
    std::string command;
    std::string config;
    std::string out;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<int> order;
    std::optional<std::string> side;
};

/// Result of one command: CSV body, optional companion files, human-readable notes.
struct CommandOutput {
    int code = kExitOk;
    std::optional<CsvTable> csv;
    std::vector<std::pair<std::string, CsvTable>> companions;  ///< (suffix, table)
    std::vector<std::pair<std::string, std::string>> attachments;  ///< (suffix, text)
    std::string summary;
};

namespace detail {

inline void require_grid(const RunConfig& c, bool strikes, bool maturities) {
    if (strikes && c.strikes.empty()) throw ConfigError("config: 'strikes' must be a non-empty list");
    if (maturities && c.maturities.empty()) throw ConfigError("config: 'maturities' must be a non-empty list");
}

inline std::string side_str(Side s) { return side_name(s); }

}  // namespace detail

inline CommandOutput cmd_price(const RunConfig& c, int jobs) {
    detail::require_grid(c, true, true);
    const TaylorTable tab = c.model.table_at(c.x, c.y);
    const TradedOperators ops = traded_operators(tab);
    struct Job {
        double k, T;
        Side side;
    };
    std::vector<Job> work;
    for (double T : c.maturities)
        for (double k : c.strikes)
            for (Side s : c.sides) work.push_back({k, T, s});
    std::vector<PriceExpansion> res(work.size());
    std::vector<std::string> err(work.size());
    parallel_for(work.size(), jobs, [&](std::size_t i) {
        try {
            res[i] = u_terms(tab, ops, CallSpec{work[i].k, work[i].T, c.t},
                             IndifferenceSetting{c.gamma_nu.signed_for(work[i].side), c.x, c.y});
        } catch (const Error& e) {
            err[i] = e.what();
        }
    });
    CommandOutput out;
    out.csv.emplace(std::vector<std::string>{"k", "T", "side", "gamma_nu", "u0", "u1", "u2_lin", "u2_ind", "ubar",
                                             "qbar", "error"});
    for (std::size_t i = 0; i < work.size(); ++i) {
        const PriceExpansion& p = res[i];
        const double nan = std::nan("");
        const bool ok = err[i].empty();
        out.csv->add({work[i].k, work[i].T, detail::side_str(work[i].side), c.gamma_nu.signed_for(work[i].side),
                      ok ? p.u0 : nan, ok ? p.u1 : nan, ok ? p.u2_lin : nan, ok ? p.u2_ind : nan,
                      ok ? p.ubar(c.order) : nan, ok ? p.qbar(c.order) : nan, err[i]});
        if (!ok) out.code = kExitNumeric;
    }
    return out;
}

/// Black-Scholes implied vol of the Heston semi-analytic price.
inline double heston_exact_iv(const nlohmann::json& hp, double x, double y, double k, double t, double T) {
    const double price = heston_call_exact(hp.at("delta").get<double>(), hp.at("theta").get<double>(),
                                           hp.at("kappa").get<double>(), hp.at("rho").get<double>(), x, y, k, T - t);
    return implied_vol_invert(price, t, x, k, T);
}

inline CommandOutput cmd_iv_surface(const RunConfig& c, int jobs) {
    detail::require_grid(c, true, true);
    const TaylorTable tab = c.model.table_at(c.x, c.y);
    struct Job {
        double k, T;
        Side side;
    };
    std::vector<Job> work;
    for (double T : c.maturities)
        for (double k : c.strikes)
            for (Side s : c.sides) work.push_back({k, T, s});
    std::vector<IVExpansion> res(work.size());
    std::vector<std::string> err(work.size());
    parallel_for(work.size(), jobs, [&](std::size_t i) {
        try {
            res[i] = iv_terms_closed_form(tab, CallSpec{work[i].k, work[i].T, c.t},
                                          IndifferenceSetting{c.gamma_nu.signed_for(work[i].side), c.x, c.y});
        } catch (const Error& e) {
            err[i] = e.what();
        }
    });
    CommandOutput out;
    out.csv.emplace(std::vector<std::string>{"k", "T", "L", "side", "sigma0", "sigma1", "sigma2_lin", "sigma2_ind",
                                             "ivbar2", "half_spread", "ivbar_m", "error"});
    const double nan = std::nan("");
    for (std::size_t i = 0; i < work.size(); ++i) {
        const IVExpansion& e = res[i];
        const bool ok = err[i].empty();
        out.csv->add({work[i].k, work[i].T, work[i].k - c.x, detail::side_str(work[i].side), ok ? e.sigma0 : nan,
                      ok ? e.sigma1 : nan, ok ? e.sigma2_lin : nan, ok ? e.sigma2_ind : nan, ok ? e.ivbar(2) : nan,
                      ok ? std::abs(e.sigma2_ind_gamma) : nan, ok ? e.ivbar(c.order) : nan, err[i]});
        if (!ok) out.code = kExitNumeric;
    }

    // Four-curve dataset: buyer, seller, Heston exact, and the second-order vol without the indifference term.
    if (c.model.builtin == "heston") {
        std::vector<std::pair<double, double>> pts;
        for (double T : c.maturities)
            for (double k : c.strikes) pts.push_back({k, T});
        struct Curve {
            double buyer = 0, seller = 0, exact = 0, linear = 0;
            std::string error;
        };
        std::vector<Curve> cv(pts.size());
        parallel_for(pts.size(), jobs, [&](std::size_t i) {
            const auto [k, T] = pts[i];
            try {
                const CallSpec spec{k, T, c.t};
                const IVExpansion b =
                    iv_terms_closed_form(tab, spec, IndifferenceSetting{c.gamma_nu.signed_for(Side::buyer), c.x, c.y});
                const IVExpansion s =
                    iv_terms_closed_form(tab, spec, IndifferenceSetting{c.gamma_nu.signed_for(Side::seller), c.x, c.y});
                cv[i].buyer = b.ivbar(2);
                cv[i].seller = s.ivbar(2);
                cv[i].linear = b.ivbar(2) - b.sigma2_ind;
                cv[i].exact = heston_exact_iv(c.model.params, c.x, c.y, k, c.t, T);
            } catch (const Error& e) {
                cv[i].error = e.what();
            }
        });
        CsvTable t({"k", "T", "L", "iv_buyer", "iv_seller", "iv_heston_exact", "iv_second_order_minus_ind", "error"});
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const bool ok = cv[i].error.empty();
            t.add({pts[i].first, pts[i].second, pts[i].first - c.x, ok ? cv[i].buyer : nan, ok ? cv[i].seller : nan,
                   ok ? cv[i].exact : nan, ok ? cv[i].linear : nan, cv[i].error});
            if (!ok) out.code = kExitNumeric;
        }
        out.companions.emplace_back("_curves", std::move(t));
    }
    return out;
}

inline CommandOutput cmd_spread(const RunConfig& c, int jobs) {
    detail::require_grid(c, true, true);
    const TaylorTable tab = c.model.table_at(c.x, c.y);
    const TradedOperators ops = traded_operators(tab);
    std::vector<std::pair<double, double>> pts;
    for (double T : c.maturities)
        for (double k : c.strikes) pts.push_back({k, T});
    struct Row {
        double ivb = 0, ivs = 0, pb = 0, ps = 0;
        std::string error;
    };
    std::vector<Row> rows(pts.size());
    parallel_for(pts.size(), jobs, [&](std::size_t i) {
        const auto [k, T] = pts[i];
        try {
            const CallSpec spec{k, T, c.t};
            const IndifferenceSetting sb{c.gamma_nu.signed_for(Side::buyer), c.x, c.y};
            const IndifferenceSetting ss{c.gamma_nu.signed_for(Side::seller), c.x, c.y};
            rows[i].ivb = iv_terms_closed_form(tab, spec, sb).ivbar(c.order);
            rows[i].ivs = iv_terms_closed_form(tab, spec, ss).ivbar(c.order);
            rows[i].pb = u_terms(tab, ops, spec, sb).ubar(c.order);
            rows[i].ps = u_terms(tab, ops, spec, ss).ubar(c.order);
        } catch (const Error& e) {
            rows[i].error = e.what();
        }
    });
    CommandOutput out;
    out.csv.emplace(std::vector<std::string>{"k", "T", "L", "iv_buyer", "iv_seller", "iv_spread", "price_buyer",
                                             "price_seller", "price_spread", "error"});
    const double nan = std::nan("");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Row& r = rows[i];
        const bool ok = r.error.empty();
        out.csv->add({pts[i].first, pts[i].second, pts[i].first - c.x, ok ? r.ivb : nan, ok ? r.ivs : nan,
                      ok ? r.ivs - r.ivb : nan, ok ? r.pb : nan, ok ? r.ps : nan, ok ? r.ps - r.pb : nan, r.error});
        if (!ok) out.code = kExitNumeric;
    }
    return out;
}

inline bool has_fd1d(const RunConfig& c) { return c.raw.contains("oracles") && c.raw.at("oracles").contains("fd1d"); }

inline CommandOutput cmd_nontraded(const RunConfig& c, int jobs) {
    if (c.k1.empty()) throw ConfigError("config: 'nontraded.k1' must be a non-empty list");
    if (c.maturities.empty()) throw ConfigError("config: 'nontraded.maturity' is required");
    const LSVModel& m = c.model.require_model("nontraded-price");
    const double T = c.maturities.front();
    const bool oracle = has_fd1d(c);
    struct Job {
        double k1;
        Side side;
    };
    std::vector<Job> work;
    for (Side s : c.sides)
        for (double k1 : c.k1) work.push_back({k1, s});
    struct Row {
        NontradedPrice np;
        double oracle = std::nan("");
        std::string error;
    };
    std::vector<Row> rows(work.size());
    parallel_for(work.size(), jobs, [&](std::size_t i) {
        try {
            const PayoffY pay = PayoffY::call_spread(work[i].k1, c.k2);
            const double g = c.gamma_nu.signed_for(work[i].side);
            rows[i].np = nontraded_price(m, pay, g, c.t, c.y, T, 2);
            if (oracle) rows[i].oracle = nontraded_price_fd(m, pay, g, c.t, c.y, T, c.fd1d).value;
        } catch (const Error& e) {
            rows[i].error = e.what();
        }
    });
    CommandOutput out;
    out.csv.emplace(std::vector<std::string>{"k1", "k2", "side", "gamma_nu", "ubar_0", "ubar_1", "ubar_2", "oracle_u",
                                             "abs_err", "error"});
    const double nan = std::nan("");
    for (std::size_t i = 0; i < work.size(); ++i) {
        const Row& r = rows[i];
        const bool ok = r.error.empty();
        const double ub = ok ? r.np.ubar[c.order] : nan;
        out.csv->add({work[i].k1, c.k2, detail::side_str(work[i].side), c.gamma_nu.signed_for(work[i].side),
                      ok ? r.np.ubar[0] : nan, ok ? r.np.ubar[1] : nan, ok ? r.np.ubar[2] : nan, r.oracle,
                      std::abs(ub - r.oracle), r.error});
        if (!ok) out.code = kExitNumeric;
    }
    return out;
}

struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

/// Oracle-agreement suite; which checks run depends on the model in the config.
inline std::vector<CheckResult> verification_checks(const RunConfig& c, int jobs) {
    std::vector<CheckResult> out;
    const TaylorTable tab = c.model.table_at(c.x, c.y);
    const TradedOperators ops = traded_operators(tab);
    const double gb = c.gamma_nu.signed_for(Side::buyer), gs = c.gamma_nu.signed_for(Side::seller);

    bool constant = true;
    for (Coeff co : kAllCoeffs)
        for (int s = 1; s < 6; ++s) constant = constant && tab.coeffs[static_cast<int>(co)][s] == 0.0;

    double degen = 0.0, cf_gen = 0.0, order_gap = 0.0, gamma_indep = 0.0;
    for (double T : c.maturities)
        for (double k : c.strikes) {
            const CallSpec spec{k, T, c.t};
            const PriceExpansion pb = u_terms(tab, ops, spec, IndifferenceSetting{gb, c.x, c.y});
            const PriceExpansion ps = u_terms(tab, ops, spec, IndifferenceSetting{gs, c.x, c.y});
            order_gap = std::max(order_gap, pb.ubar(2) - ps.ubar(2));
            gamma_indep = std::max(gamma_indep, std::abs(pb.qbar(2) - ps.qbar(2)));
            if (constant) {
                const double bs = bs_call(c.t, c.x, tab.sigma0(), k, T);
                degen = std::max(degen, std::abs(pb.ubar(2) - bs));
                degen = std::max(degen, std::abs(pb.u2_ind) + std::abs(ps.u2_ind));
            }
            const double vega = bs_vega(c.t, c.x, tab.sigma0(), k, T);
            if (vega > 1e-6 * std::exp(c.x) && std::abs(tab.xbar - c.x) < 1e-14 && std::abs(tab.ybar - c.y) < 1e-14) {
                const IVExpansion a = iv_terms_closed_form(tab, spec, IndifferenceSetting{gb, c.x, c.y});
                const IVExpansion g = iv_terms_generic(pb, tab.sigma0(), spec, c.x);
                cf_gen = std::max({cf_gen, std::abs(a.sigma1 - g.sigma1), std::abs(a.sigma2() - g.sigma2())});
            }
        }
    if (constant) out.push_back({"degeneracy_constant_table", degen, 1e-12, degen <= 1e-12, "|ubar_2 - BS| and |u2_ind|"});
    out.push_back({"closed_form_vs_generic_iv", cf_gen, 1e-10, cf_gen <= 1e-10, "max over strikes x maturities"});
    out.push_back({"buyer_not_above_seller", order_gap, 0.0, order_gap <= 0.0, "max(ubar_2 buyer - seller)"});
    out.push_back({"linear_part_gamma_free", gamma_indep, 1e-14, gamma_indep <= 1e-14, "qbar_2 buyer vs seller"});

    if (c.model.builtin == "heston") {
        double worst = 0.0;
        for (double T : c.maturities)
            for (double k : c.strikes) {
                if (std::abs(k - c.x) > 0.15) continue;
                const IVExpansion e = iv_terms_closed_form(tab, CallSpec{k, T, c.t}, IndifferenceSetting{gb, c.x, c.y});
                worst = std::max(worst, std::abs(e.ivbar(2) - e.sigma2_ind -
                                                 heston_exact_iv(c.model.params, c.x, c.y, k, c.t, T)));
            }
        out.push_back({"heston_exact_iv", worst, 0.005, worst <= 0.005, "|ivbar_2 - Sigma2_ind - IV_exact|, |L| <= 0.15"});
    }
    const nlohmann::json oracles = c.raw.value("oracles", nlohmann::json::object());
    if (oracles.contains("fd2d") && c.model.model && !c.maturities.empty()) {
        const double T = c.maturities.front();
        const TradedFdResult r = solve_traded_fd(*c.model.model, c.x, T - c.t, {gb, gs}, c.fd2d);
        double worst = 0.0, tol_used = 0.0;
        bool pass = true;
        for (std::size_t q = 0; q < 2; ++q) {
            const auto fd = r.u_at(q, c.x, c.y);
            const PriceExpansion p = u_terms(tab, ops, CallSpec{c.x, T, c.t}, IndifferenceSetting{q ? gs : gb, c.x, c.y});
            const double tol = std::max(3.0 * fd.richardson, c.tolerance * std::exp(c.x));
            const double e = std::abs(p.ubar(2) - fd.value);
            worst = std::max(worst, e);
            tol_used = std::max(tol_used, tol);
            pass = pass && e <= tol;
        }
        out.push_back({"fd2d_atm_agreement", worst, tol_used, pass, "|ubar_2 - u_FD| at the money, both sides"});
    }
    if (oracles.contains("mc") && c.model.model && !c.maturities.empty() && !c.strikes.empty()) {
        const double T = c.maturities.front();
        std::vector<std::function<double(double)>> pays;
        for (double k : c.strikes) pays.push_back(call_payoff(k));
        MCOptions o = c.mc;
        o.seed = c.seed;
        o.jobs = jobs;
        const auto mc = mc_linear_prices(*c.model.model, pays, c.t, c.x, c.y, T, o);
        double worst = 0.0;
        for (std::size_t i = 0; i < c.strikes.size(); ++i) {
            const PriceExpansion p = u_terms(tab, ops, CallSpec{c.strikes[i], T, c.t}, IndifferenceSetting{gb, c.x, c.y});
            worst = std::max(worst, std::abs(p.qbar(2) - mc[i].price) / mc[i].standard_error);
        }
        out.push_back({"mc_linear_split", worst, 3.0, worst <= 3.0, "|qbar_2 - MC| / SE, max over strikes"});
    }
    if (has_fd1d(c) && !c.k1.empty() && c.model.model && c.model.model->y_only && !c.maturities.empty()) {
        const double T = c.maturities.front();
        double worst = 0.0, tol = std::numeric_limits<double>::infinity();
        for (Side s : c.sides)
            for (double k1 : c.k1) {
                const PayoffY pay = PayoffY::call_spread(k1, c.k2);
                const double g = c.gamma_nu.signed_for(s);
                const double ub = nontraded_price(*c.model.model, pay, g, c.t, c.y, T, 2).ubar[2];
                const double fd = nontraded_price_fd(*c.model.model, pay, g, c.t, c.y, T, c.fd1d).value;
                worst = std::max(worst, std::abs(ub - fd) / (c.k2 - k1));
            }
        tol = 0.02;
        out.push_back({"nontraded_fd_agreement", worst, tol, worst <= tol, "|ubar_2 - u_FD| / (k2 - k1)"});
    }
    return out;
}

inline CommandOutput cmd_verify(const RunConfig& c, int jobs) {
    detail::require_grid(c, true, true);
    const auto checks = verification_checks(c, jobs);
    CommandOutput out;
    out.csv.emplace(std::vector<std::string>{"check", "value", "tolerance", "pass", "detail"});
    std::ostringstream ss;
    for (const auto& r : checks) {
        out.csv->add({r.name, r.value, r.tolerance, std::string(r.pass ? "pass" : "FAIL"), r.detail});
        char line[256];
        std::snprintf(line, sizeof line, "%-28s %-4s value=%.3e tol=%.3e\n", r.name.c_str(), r.pass ? "pass" : "FAIL",
                      r.value, r.tolerance);
        ss << line;
        if (!r.pass) out.code = kExitVerification;
    }
    out.summary = ss.str();
    return out;
}

inline CommandOutput cmd_order_check(const RunConfig& c, int jobs) {
    if (c.k1.empty()) throw ConfigError("config: 'nontraded.k1' must list the lower spread strike");
    if (!has_fd1d(c)) throw ConfigError("config: order-check needs 'oracles.fd1d'");
    if (c.probe_y.empty()) throw ConfigError("config: order-check needs 'oracles.probe.y'");
    const LSVModel& m = c.model.require_model("order-check");
    const PayoffY pay = PayoffY::call_spread(c.k1.front(), c.k2);
    std::vector<ProbeResult> res(c.sides.size());
    std::vector<std::string> err(c.sides.size());
    parallel_for(c.sides.size(), jobs, [&](std::size_t i) {
        try {
            res[i] = convergence_probe(m, pay, c.gamma_nu.signed_for(c.sides[i]), c.probe_y, c.probe_taus, c.fd1d);
        } catch (const NumericError& e) {
            err[i] = e.what();
        }
    });
    CommandOutput out;
    out.csv.emplace(std::vector<std::string>{"side", "row", "tau", "m0", "m1", "m2", "oracle_err"});
    std::ostringstream ss;
    nlohmann::json report = nlohmann::json::array();
    for (std::size_t i = 0; i < c.sides.size(); ++i) {
        const std::string side = side_name(c.sides[i]);
        if (!err[i].empty()) throw NumericError(err[i]);
        const ProbeResult& r = res[i];
        for (std::size_t q = 0; q < r.taus.size(); ++q)
            out.csv->add({side, std::string("sup_error"), r.taus[q], r.sup_error[0][q], r.sup_error[1][q],
                          r.sup_error[2][q], r.oracle_error[q]});
        const double nan = std::nan("");
        out.csv->add({side, std::string("slope"), nan, r.slope[0], r.slope[1], r.slope[2], nan});
        bool ok = true;
        for (int mm = 0; mm < 3; ++mm) ok = ok && r.slope[mm] >= (mm + 2) / 2.0 - 0.3;
        const double gap = r.slope[2] - r.slope[0];
        ok = ok && gap >= 0.6 && gap <= 1.4;
        char line[256];
        std::snprintf(line, sizeof line, "%-6s slopes %.3f %.3f %.3f  gap %.3f  %s%s\n", side.c_str(), r.slope[0],
                      r.slope[1], r.slope[2], gap, ok ? "pass" : "FAIL",
                      r.oracle_dominated[2] ? " (oracle error near the signal)" : "");
        ss << line;
        if (!ok) out.code = kExitVerification;
        nlohmann::json j = r.to_json();
        j["side"] = side;
        report.push_back(j);
    }
    out.summary = ss.str();
    out.attachments.emplace_back(".json", report.dump(2) + "\n");
    return out;
}

namespace detail {

inline std::string with_suffix(const std::string& path, const std::string& suffix) {
    std::filesystem::path p(path);
    if (suffix.front() == '.') return (p.parent_path() / (p.stem().string() + suffix)).string();
    return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

inline void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file '" + path + "'");
    body(f);
}

}  // namespace detail

inline int run_command(const CliOptions& o, std::ostream& out, std::ostream& err) {
    try {
        if (o.config.empty()) throw ConfigError("--config is required");
        RunConfig c = load_config(o.config);
        if (o.seed) c.seed = *o.seed;
        if (o.order) {
            if (*o.order < 0 || *o.order > 2) throw ConfigError("--order must be 0, 1 or 2");
            c.order = *o.order;
        }
        if (o.side) c.sides = parse_sides(*o.side);
        if (o.jobs < 1) throw ConfigError("--jobs must be >= 1");
        const std::string target = !o.out.empty() ? o.out : c.output;

        CommandOutput r;
        if (o.command == "price") r = cmd_price(c, o.jobs);
        else if (o.command == "iv-surface") r = cmd_iv_surface(c, o.jobs);
        else if (o.command == "spread") r = cmd_spread(c, o.jobs);
        else if (o.command == "nontraded-price") r = cmd_nontraded(c, o.jobs);
        else if (o.command == "verify") r = cmd_verify(c, o.jobs);
        else if (o.command == "order-check") r = cmd_order_check(c, o.jobs);
        else throw ConfigError("unknown command '" + o.command + "'");

        if (target.empty()) {
            if (r.csv) r.csv->write(out);
            for (const auto& [suffix, t] : r.companions) {
                out << '\n';
                t.write(out);
            }
        } else {
            detail::write_file(target, [&](std::ostream& f) { r.csv->write(f); });
            for (const auto& [suffix, t] : r.companions)
                detail::write_file(detail::with_suffix(target, suffix), [&](std::ostream& f) { t.write(f); });
            for (const auto& [suffix, text] : r.attachments)
                detail::write_file(detail::with_suffix(target, suffix), [&](std::ostream& f) { f << text; });
        }
        if (!r.summary.empty()) err << r.summary;
        return r.code;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "config error (domain): " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Asymptotic utility-indifference prices and implied volatilities under LSV models"};
    app.require_subcommand(1);
    CliOptions o;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"price", "indifference call prices per strike, maturity and side"},
        {"iv-surface", "buyer/seller implied-volatility surface"},
        {"spread", "seller minus buyer implied vol and price"},
        {"nontraded-price", "indifference prices of call spreads on the non-traded factor"},
        {"verify", "oracle-agreement checks with a pass/fail table"},
        {"order-check", "empirical convergence order of the non-traded expansion"}};
    std::string side;
    int order = -1;
    std::uint64_t seed = 0;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", o.config, "run configuration (JSON)")->required();
        sub->add_option("--out", o.out, "output CSV path (default: stdout)");
        sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "random seed (overrides the config)");
        sub->add_option("--order", order, "expansion order")->check(CLI::Range(0, 2));
        sub->add_option("--side", side, "buyer, seller or both")->check(CLI::IsMember({"buyer", "seller", "both"}));
        sub->callback([&o, name = name] { o.command = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    }
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.get_subcommand(name);
        if (!sub->parsed()) continue;
        if (sub->count("--seed")) o.seed = seed;
        if (sub->count("--order")) o.order = order;
        if (sub->count("--side")) o.side = side;
    }
    return run_command(o, out, err);
}

}  // namespace indiff
