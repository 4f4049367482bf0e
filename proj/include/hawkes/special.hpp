#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

namespace hawkes::special {

inline constexpr double inv_sqrt_2pi = 0.3989422804014327;
inline constexpr double inv_sqrt_pi = 0.5641895835477563;

[[nodiscard]] inline double normal_pdf(double x) noexcept { return inv_sqrt_2pi * std::exp(-0.5 * x * x); }
[[nodiscard]] inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }
[[nodiscard]] inline double normal_sf(double x) noexcept { return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0); }

// P(lo < Z <= hi) without cancellation in either tail.
[[nodiscard]] inline double normal_mass(double lo, double hi) noexcept {
    if (!(lo < hi)) return 0.0;
    if (lo > 0.0) return normal_sf(lo) - normal_sf(hi);
    return normal_cdf(hi) - normal_cdf(lo);
}

// exp(x^2) erfc(x), accurate for large positive x.
[[nodiscard]] inline double erfcx(double x) noexcept {
    if (x < 25.0) return std::exp(x * x) * std::erfc(x);
    const double r = 1.0 / (x * x);
    return inv_sqrt_pi / x * (1.0 - 0.5 * r * (1.0 - 1.5 * r * (1.0 - 2.5 * r)));
}

// Forward-mode dual number with N tangent directions.
template <std::size_t N>
struct Dual {
    double v{0.0};
    std::array<double, N> d{};

    Dual() = default;
    Dual(double value) : v(value) {}  // NOLINT: constants promote implicitly

    static Dual variable(double value, std::size_t slot) {
        Dual x(value);
        x.d[slot] = 1.0;
        return x;
    }

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (std::size_t k = 0; k < N; ++k) d[k] += o.d[k];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (std::size_t k = 0; k < N; ++k) d[k] -= o.d[k];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        for (std::size_t k = 0; k < N; ++k) d[k] = d[k] * o.v + v * o.d[k];
        v *= o.v;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        const double inv = 1.0 / o.v;
        for (std::size_t k = 0; k < N; ++k) d[k] = (d[k] - v * inv * o.d[k]) * inv;
        v *= inv;
        return *this;
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend Dual operator/(Dual a, const Dual& b) { return a /= b; }
    friend Dual operator-(Dual a) {
        a.v = -a.v;
        for (auto& x : a.d) x = -x;
        return a;
    }
    friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
};

template <std::size_t N>
Dual<N> chain(const Dual<N>& x, double value, double slope) {
    Dual<N> r(value);
    for (std::size_t k = 0; k < N; ++k) r.d[k] = slope * x.d[k];
    return r;
}

inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Dual<N>& x) {
    return x.v;
}

// Overloads mirroring <cmath> so templated formulas work on both types.
inline double exp_(double x) { return std::exp(x); }
inline double sqrt_(double x) { return std::sqrt(x); }
inline double ncdf_(double x) { return normal_cdf(x); }
inline double nsf_(double x) { return normal_sf(x); }
inline double erfcx_(double x) { return erfcx(x); }

template <std::size_t N>
Dual<N> exp_(const Dual<N>& x) {
    const double e = std::exp(x.v);
    return chain(x, e, e);
}
template <std::size_t N>
Dual<N> sqrt_(const Dual<N>& x) {
    const double r = std::sqrt(x.v);
    return chain(x, r, 0.5 / r);
}
template <std::size_t N>
Dual<N> ncdf_(const Dual<N>& x) {
    return chain(x, normal_cdf(x.v), normal_pdf(x.v));
}
template <std::size_t N>
Dual<N> nsf_(const Dual<N>& x) {
    return chain(x, normal_sf(x.v), -normal_pdf(x.v));
}
template <std::size_t N>
Dual<N> erfcx_(const Dual<N>& x) {
    const double e = erfcx(x.v);
    return chain(x, e, 2.0 * x.v * e - 2.0 * inv_sqrt_pi);
}

template <class R>
R max_(const R& a, const R& b) {
    return a < b ? b : a;
}
template <class R>
R min_(const R& a, const R& b) {
    return b < a ? b : a;
}

template <class R>
R normal_mass_(const R& lo, const R& hi) {
    if (!(lo < hi)) return R(0.0);
    if (value_of(lo) > 0.0) return nsf_(lo) - nsf_(hi);
    return ncdf_(hi) - ncdf_(lo);
}

}  // namespace hawkes::special
