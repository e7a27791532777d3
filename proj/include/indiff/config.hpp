#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "indiff/implied_vol.hpp"
#include "indiff/model.hpp"
#include "indiff/nontraded.hpp"
#include "indiff/oracles/fd1d.hpp"
#include "indiff/oracles/fd2d.hpp"
#include "indiff/oracles/monte_carlo.hpp"

namespace indiff {

/// Model section: either a builtin model or a bare Taylor table.
struct ModelSource {
    std::optional<LSVModel> model;
    std::optional<TaylorTable> table;
    std::string builtin;  ///< "heston", "reciprocal_heston", "constant" or "table"
    nlohmann::json params;

    /// Taylor table expanded at (x, y); a bare table is returned as given.
    TaylorTable table_at(double x, double y) const {
        if (table) return *table;
        return taylor_table(*model, x, y, 2);
    }
    const LSVModel& require_model(const std::string& what) const {
        if (!model) throw ConfigError(what + " needs a builtin model, not a bare Taylor table");
        return *model;
    }
};

struct GammaNu {
    double buyer = 0.0;   ///< magnitude used on the buyer side
    double seller = 0.0;  ///< magnitude used on the seller side
    double signed_for(Side s) const { return signed_gamma_nu(s == Side::buyer ? buyer : seller, s); }
};

struct RunConfig {
    ModelSource model;
    GammaNu gamma_nu;
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;
    std::vector<double> strikes;     ///< log-strikes
    std::vector<double> maturities;
    std::vector<double> k1;          ///< non-traded sweep
    double k2 = 0.0;
    int order = 2;
    std::vector<Side> sides{Side::buyer, Side::seller};
    std::uint64_t seed = 1;
    std::string output;
    Fd1dParams fd1d;
    Fd2dParams fd2d;
    MCOptions mc;
    std::vector<double> probe_taus{0.2, 0.1, 0.05, 0.025};
    std::vector<double> probe_y;
    double tolerance = 5e-4;
    nlohmann::json raw;
};

namespace detail {

inline double req_num(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    if (!j.at(key).is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline double opt_num(const nlohmann::json& j, const char* key, double def, const std::string& where) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline std::vector<double> num_list(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw ConfigError(where + ": '" + key + "' must be a number or an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(where + ": '" + key + "' entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open file '" + p.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed JSON in '" + p.string() + "': " + e.what());
    }
}

inline TaylorTable parse_table(const nlohmann::json& j) {
    TaylorTable t;
    t.xbar = opt_num(j, "xbar", 0.0, "table");
    t.ybar = opt_num(j, "ybar", 0.0, "table");
    t.rho = req_num(j, "rho", "table");
    if (!j.contains("a")) throw ConfigError("table: missing 'a'");
    for (Coeff c : kAllCoeffs) {
        const std::string name = coeff_name(c);
        if (!j.contains(name)) continue;
        const auto v = num_list(j, name.c_str(), "table");
        if (v.size() > 6) throw ConfigError("table: '" + name + "' has more than 6 entries");
        for (std::size_t s = 0; s < v.size(); ++s) t.coeffs[static_cast<int>(c)][s] = v[s];
    }
    t.validate();
    return t;
}

inline ModelSource parse_model(const nlohmann::json& j, const std::filesystem::path& base) {
    if (j.is_string()) {
        const std::filesystem::path p = base / j.get<std::string>();
        return parse_model(read_json(p), p.parent_path());
    }
    if (!j.is_object()) throw ConfigError("model: expected an object or a file name");
    ModelSource src;
    src.params = j;
    if (j.contains("table")) {
        src.builtin = "table";
        src.table = parse_table(j.at("table"));
        return src;
    }
    if (!j.contains("builtin") || !j.at("builtin").is_string()) throw ConfigError("model: missing 'builtin' or 'table'");
    src.builtin = j.at("builtin").get<std::string>();
    const std::string w = "model '" + src.builtin + "'";
    if (src.builtin == "heston") {
        SharpeRatio lam;
        if (j.contains("lambda")) {
            const auto& l = j.at("lambda");
            if (l.is_number()) {
                lam.l0 = l.get<double>();
            } else {
                lam.l0 = opt_num(l, "l0", 0.0, w);
                lam.lx = opt_num(l, "lx", 0.0, w);
                lam.ly = opt_num(l, "ly", 0.0, w);
            }
        }
        src.model = heston_model(req_num(j, "delta", w), req_num(j, "theta", w), req_num(j, "kappa", w),
                                 req_num(j, "rho", w), lam, j.value("zero_h01", false));
    } else if (src.builtin == "reciprocal_heston") {
        src.model = reciprocal_heston_model(req_num(j, "a", w), req_num(j, "b", w), req_num(j, "kappa", w),
                                            req_num(j, "mu", w), req_num(j, "rho", w));
    } else if (src.builtin == "constant") {
        src.model = constant_model(req_num(j, "sigma", w), opt_num(j, "beta", 0.0, w), opt_num(j, "c", 0.0, w),
                                   opt_num(j, "mu", 0.0, w), req_num(j, "rho", w));
    } else {
        throw ConfigError("model: unknown builtin '" + src.builtin + "'");
    }
    return src;
}

inline Side parse_side(const std::string& s) {
    if (s == "buyer") return Side::buyer;
    if (s == "seller") return Side::seller;
    throw ConfigError("side must be buyer, seller or both (got '" + s + "')");
}

}  // namespace detail

inline std::vector<Side> parse_sides(const std::string& s) {
    if (s == "both") return {Side::buyer, Side::seller};
    return {detail::parse_side(s)};
}

/// Parses a run configuration. Relative model-file paths resolve against `base`.
inline RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base = ".") {
    using namespace detail;
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    RunConfig c;
    c.raw = j;
    if (!j.contains("model")) throw ConfigError("config: missing 'model'");
    c.model = parse_model(j.at("model"), base);

    const nlohmann::json s = j.value("setting", nlohmann::json::object());
    c.x = opt_num(s, "x", 0.0, "setting");
    c.y = opt_num(s, "y", c.model.table ? c.model.table->ybar : 0.0, "setting");
    c.t = opt_num(s, "t", 0.0, "setting");
    if (s.contains("gamma_nu")) {
        const auto& g = s.at("gamma_nu");
        if (g.is_number()) {
            c.gamma_nu.buyer = c.gamma_nu.seller = std::abs(g.get<double>());
        } else if (g.is_object()) {
            c.gamma_nu.buyer = std::abs(req_num(g, "buyer", "setting.gamma_nu"));
            c.gamma_nu.seller = std::abs(req_num(g, "seller", "setting.gamma_nu"));
        } else {
            throw ConfigError("setting.gamma_nu must be a number or {buyer, seller}");
        }
    }

    c.strikes = num_list(j, "strikes", "config");
    c.maturities = num_list(j, "maturities", "config");
    if (j.contains("nontraded")) {
        const auto& n = j.at("nontraded");
        c.k1 = num_list(n, "k1", "nontraded");
        c.k2 = opt_num(n, "k2", 0.0, "nontraded");
        if (n.contains("maturity")) c.maturities = {req_num(n, "maturity", "nontraded")};
    }
    c.order = static_cast<int>(opt_num(j, "order", 2.0, "config"));
    if (c.order < 0 || c.order > 2) throw ConfigError("config: order must be 0, 1 or 2");
    if (j.contains("side")) c.sides = parse_sides(j.at("side").get<std::string>());
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ConfigError("config: seed must be a non-negative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    c.output = j.value("output", std::string());
    c.tolerance = opt_num(j, "tolerance", c.tolerance, "config");

    const nlohmann::json o = j.value("oracles", nlohmann::json::object());
    if (o.contains("fd1d")) {
        const auto& f = o.at("fd1d");
        c.fd1d.y_lo = req_num(f, "y_lo", "oracles.fd1d");
        c.fd1d.y_hi = req_num(f, "y_hi", "oracles.fd1d");
        c.fd1d.ny = static_cast<int>(opt_num(f, "ny", c.fd1d.ny, "oracles.fd1d"));
        c.fd1d.nt = static_cast<int>(opt_num(f, "nt", c.fd1d.nt, "oracles.fd1d"));
    }
    if (o.contains("fd2d")) {
        const auto& f = o.at("fd2d");
        c.fd2d.x_lo = opt_num(f, "x_lo", c.fd2d.x_lo, "oracles.fd2d");
        c.fd2d.x_hi = opt_num(f, "x_hi", c.fd2d.x_hi, "oracles.fd2d");
        c.fd2d.y_lo = opt_num(f, "y_lo", c.fd2d.y_lo, "oracles.fd2d");
        c.fd2d.y_hi = opt_num(f, "y_hi", c.fd2d.y_hi, "oracles.fd2d");
        c.fd2d.nx = static_cast<int>(opt_num(f, "nx", c.fd2d.nx, "oracles.fd2d"));
        c.fd2d.ny = static_cast<int>(opt_num(f, "ny", c.fd2d.ny, "oracles.fd2d"));
        c.fd2d.nt = static_cast<int>(opt_num(f, "nt", c.fd2d.nt, "oracles.fd2d"));
    }
    if (o.contains("mc")) {
        const auto& f = o.at("mc");
        c.mc.paths = static_cast<long long>(opt_num(f, "paths", static_cast<double>(c.mc.paths), "oracles.mc"));
        c.mc.steps = static_cast<int>(opt_num(f, "steps", c.mc.steps, "oracles.mc"));
    }
    if (o.contains("probe")) {
        const auto& f = o.at("probe");
        if (f.contains("taus")) c.probe_taus = num_list(f, "taus", "oracles.probe");
        c.probe_y = num_list(f, "y", "oracles.probe");
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(detail::read_json(path), path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace indiff
