#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "indiff/error.hpp"

namespace indiff {

/// Time slice of a finite-difference solve on a uniform tensor mesh.
/// 1-D solutions leave `x` empty and store values along y.
struct GridSolution {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> values;  ///< row-major, index ix * ny + iy
    int nt = 0;
    double dt = 0.0;
    double richardson_error = 0.0;
    std::string scheme;

    std::size_t nx() const { return x.empty() ? 1 : x.size(); }
    std::size_t ny() const { return y.size(); }
    double at(std::size_t ix, std::size_t iy) const { return values[ix * ny() + iy]; }

    void validate() const {
        auto increasing = [](const std::vector<double>& v) {
            for (std::size_t i = 1; i < v.size(); ++i)
                if (!(v[i] > v[i - 1])) return false;
            return true;
        };
        if (!increasing(x) || !increasing(y)) throw NumericError("GridSolution: mesh not strictly increasing");
        if (values.size() != nx() * ny()) throw NumericError("GridSolution: value array size mismatch");
        for (double v : values)
            if (!std::isfinite(v)) throw NumericError("GridSolution: non-finite value");
        if (!(richardson_error >= 0.0)) throw NumericError("GridSolution: negative error estimate");
    }

    /// Cubic Lagrange interpolation (tensor product in 2-D).
    double interpolate(double xq, double yq) const {
        const auto [iy0, wy] = stencil(y, yq);
        if (x.empty()) {
            double v = 0.0;
            for (int b = 0; b < 4; ++b) v += wy[b] * values[iy0 + b];
            return v;
        }
        const auto [ix0, wx] = stencil(x, xq);
        double v = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) v += wx[a] * wy[b] * at(ix0 + a, iy0 + b);
        return v;
    }
    double interpolate(double yq) const { return interpolate(0.0, yq); }

    nlohmann::json to_json(double value) const {
        nlohmann::json j;
        j["scheme"] = scheme;
        j["mesh"] = {{"nx", x.size()},
                     {"ny", y.size()},
                     {"nt", nt},
                     {"dt", dt},
                     {"x_range", x.empty() ? nlohmann::json::array() : nlohmann::json::array({x.front(), x.back()})},
                     {"y_range", nlohmann::json::array({y.front(), y.back()})}};
        j["richardson_estimate"] = richardson_error;
        j["value"] = value;
        return j;
    }

private:
    struct Stencil {
        std::size_t first;
        double w[4];
        double operator[](int i) const { return w[i]; }
    };
    static std::pair<std::size_t, Stencil> stencil(const std::vector<double>& nodes, double q) {
        if (nodes.size() < 4) throw NumericError("GridSolution: need at least 4 nodes to interpolate");
        if (q < nodes.front() || q > nodes.back()) throw DomainError("GridSolution: query outside the mesh");
        std::size_t i = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), q) - nodes.begin());
        i = i == 0 ? 0 : i - 1;
        std::size_t first = i >= 1 ? i - 1 : 0;
        first = std::min(first, nodes.size() - 4);
        Stencil s{first, {}};
        for (int a = 0; a < 4; ++a) {
            double w = 1.0;
            for (int b = 0; b < 4; ++b)
                if (b != a) w *= (q - nodes[first + b]) / (nodes[first + a] - nodes[first + b]);
            s.w[a] = w;
        }
        return {first, s};
    }
};

inline std::vector<double> uniform_nodes(double lo, double hi, std::size_t n) {
    if (n < 2 || !(hi > lo)) throw ConfigError("uniform mesh needs n >= 2 and hi > lo");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

}  // namespace indiff
