#pragma once

#include <cmath>
#include <compare>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "indiff/error.hpp"

namespace indiff {

/// One normal-ordered monomial  dt^r (x-xbar)^p (y-ybar)^q Dx^i Dy^j.
/// Before time integration r is the power of dt = t1 - t; afterwards it is the power of tau = T - t.
struct Monomial {
    int r = 0;
    int p = 0;
    int q = 0;
    int i = 0;
    int j = 0;

    auto operator<=>(const Monomial&) const = default;
    int derivative_order() const { return i + j; }
};

/// Differential operator with polynomial coefficients in canonical form:
/// polynomial factors left of derivatives, at most one term per Monomial.
class WeylElement {
public:
    static constexpr int kMaxDerivativeOrder = 6;
    using TermMap = std::map<Monomial, double>;

    WeylElement() = default;

    static WeylElement scalar(double c) { return monomial(c, {}); }
    static WeylElement identity() { return scalar(1.0); }
    static WeylElement monomial(double c, Monomial m) {
        WeylElement w;
        w.add_term(m, c);
        return w;
    }
    static WeylElement dx() { return monomial(1.0, {0, 0, 0, 1, 0}); }
    static WeylElement dy() { return monomial(1.0, {0, 0, 0, 0, 1}); }
    /// Multiplication by (x - xbar).
    static WeylElement xpoly() { return monomial(1.0, {0, 1, 0, 0, 0}); }
    /// Multiplication by (y - ybar).
    static WeylElement ypoly() { return monomial(1.0, {0, 0, 1, 0, 0}); }
    /// Multiplication by the time variable dt (or tau).
    static WeylElement dt() { return monomial(1.0, {1, 0, 0, 0, 0}); }

    void add_term(const Monomial& m, double c) {
        if (m.r < 0 || m.p < 0 || m.q < 0 || m.i < 0 || m.j < 0)
            throw Error("WeylElement: negative exponent in monomial");
        if (m.derivative_order() > kMaxDerivativeOrder)
            throw Error("WeylElement: derivative order " + std::to_string(m.derivative_order()) +
                        " exceeds the supported maximum " + std::to_string(kMaxDerivativeOrder));
        if (c == 0.0) return;
        auto it = terms_.find(m);
        if (it == terms_.end()) {
            terms_.emplace(m, c);
        } else {
            it->second += c;
            if (it->second == 0.0) terms_.erase(it);
        }
    }

    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    double coefficient(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? 0.0 : it->second;
    }

    int max_derivative_order() const {
        int o = 0;
        for (const auto& [m, c] : terms_) o = std::max(o, m.derivative_order());
        return o;
    }
    int max_time_degree() const {
        int o = 0;
        for (const auto& [m, c] : terms_) o = std::max(o, m.r);
        return o;
    }

    WeylElement& operator+=(const WeylElement& o) {
        for (const auto& [m, c] : o.terms_) add_term(m, c);
        return *this;
    }
    WeylElement& operator-=(const WeylElement& o) {
        for (const auto& [m, c] : o.terms_) add_term(m, -c);
        return *this;
    }
    WeylElement& operator*=(double s) {
        if (s == 0.0) {
            terms_.clear();
            return *this;
        }
        for (auto& [m, c] : terms_) c *= s;
        return *this;
    }
    friend WeylElement operator+(WeylElement a, const WeylElement& b) { return a += b; }
    friend WeylElement operator-(WeylElement a, const WeylElement& b) { return a -= b; }
    friend WeylElement operator-(WeylElement a) { return a *= -1.0; }
    friend WeylElement operator*(WeylElement a, double s) { return a *= s; }
    friend WeylElement operator*(double s, WeylElement a) { return a *= s; }

    /// Exact coefficient equality.
    friend bool operator==(const WeylElement& a, const WeylElement& b) { return a.terms_ == b.terms_; }

    /// Raise every time power by k (multiplication by dt^k).
    WeylElement times_dt(int k = 1) const {
        WeylElement out;
        for (const auto& [m, c] : terms_) out.add_term({m.r + k, m.p, m.q, m.i, m.j}, c);
        return out;
    }

    /// Largest absolute coefficient; handy for tolerance-based comparisons.
    double max_abs_coefficient() const {
        double o = 0.0;
        for (const auto& [m, c] : terms_) o = std::max(o, std::abs(c));
        return o;
    }

    /// Sorted text form, one term per line: `coeff * dt^r * X^p Y^q Dx^i Dy^j`.
    std::string dump() const {
        std::ostringstream os;
        for (const auto& [m, c] : terms_) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", c);
            os << buf << " * dt^" << m.r << " * X^" << m.p << " Y^" << m.q << " Dx^" << m.i << " Dy^" << m.j
               << '\n';
        }
        return os.str();
    }

    /// Applies the operator at a point. `deriv(i, j)` must return d_x^i d_y^j f at the point;
    /// dx_bar = x - xbar, dy_bar = y - ybar and `time` is substituted for the time variable.
    template <class Deriv>
    double apply(double time, double dx_bar, double dy_bar, Deriv&& deriv) const {
        double acc = 0.0;
        for (const auto& [m, c] : terms_) {
            const double poly = ipow(time, m.r) * ipow(dx_bar, m.p) * ipow(dy_bar, m.q);
            if (poly == 0.0) continue;
            acc += c * poly * deriv(m.i, m.j);
        }
        return acc;
    }

    /// Applies the operator to the constant function 1.
    double apply_to_one(double time, double dx_bar = 0.0, double dy_bar = 0.0) const {
        return apply(time, dx_bar, dy_bar, [](int i, int j) { return (i == 0 && j == 0) ? 1.0 : 0.0; });
    }

    static double ipow(double b, int e) {
        double r = 1.0;
        for (int k = 0; k < e; ++k) r *= b;
        return r;
    }

private:
    TermMap terms_;
};

namespace detail {

inline double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int s = 1; s <= k; ++s) r = r * (n - k + s) / s;
    return r;
}

/// n!/(n-k)!
inline double falling(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int s = 0; s < k; ++s) r *= (n - s);
    return r;
}

/// Leibniz product of two monomials; time powers add. Calls emit(monomial, weight).
template <class Emit>
void compose_monomials(const Monomial& l, const Monomial& r, Emit&& emit) {
    for (int a = 0; a <= std::min(l.i, r.p); ++a) {
        const double wa = binom(l.i, a) * falling(r.p, a);
        for (int b = 0; b <= std::min(l.j, r.q); ++b) {
            const double wb = binom(l.j, b) * falling(r.q, b);
            emit(Monomial{l.r + r.r, l.p + r.p - a, l.q + r.q - b, l.i - a + r.i, l.j - b + r.j}, wa * wb);
        }
    }
}

}  // namespace detail

/// Normal-ordered product lhs o rhs.
inline WeylElement compose(const WeylElement& lhs, const WeylElement& rhs) {
    WeylElement out;
    for (const auto& [ml, cl] : lhs.terms())
        for (const auto& [mr, cr] : rhs.terms())
            detail::compose_monomials(ml, mr, [&](const Monomial& m, double w) { out.add_term(m, cl * cr * w); });
    return out;
}

inline WeylElement operator*(const WeylElement& a, const WeylElement& b) { return compose(a, b); }

inline WeylElement power(const WeylElement& a, int n) {
    WeylElement out = WeylElement::identity();
    for (int k = 0; k < n; ++k) out = compose(out, a);
    return out;
}

/// Commutator [a, b] = ab - ba.
inline WeylElement commutator(const WeylElement& a, const WeylElement& b) { return compose(a, b) - compose(b, a); }

/// Time-ordered integral over the simplex 0 <= s_1 <= ... <= s_k <= tau of
/// F_1(s_1) o F_2(s_2) o ... o F_k(s_k), where the time power of each factor's
/// terms refers to its own s_j. The result carries powers of tau.
inline WeylElement time_integral(const std::vector<WeylElement>& factors) {
    if (factors.empty()) throw Error("time_integral: need at least one factor");
    // State: monomial with r holding the cumulative time power R_j; coefficient already
    // multiplied by prod_{l <= j} 1/(R_l + l).
    WeylElement state = WeylElement::identity();
    int depth = 0;
    for (const WeylElement& f : factors) {
        ++depth;
        WeylElement next;
        for (const auto& [ms, cs] : state.terms())
            for (const auto& [mf, cf] : f.terms())
                detail::compose_monomials(ms, mf, [&](const Monomial& m, double w) {
                    next.add_term(m, cs * cf * w / static_cast<double>(m.r + depth));
                });
        state = std::move(next);
    }
    WeylElement out;
    for (const auto& [m, c] : state.terms()) out.add_term({m.r + depth, m.p, m.q, m.i, m.j}, c);
    return out;
}

}  // namespace indiff
