#pragma once

#include <cmath>
#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace hawkes::quad {

// Adaptive 21-point Gauss-Kronrod; stops when the error estimate is below rel_tol * L1.
template <class F>
double gauss_kronrod(F&& f, double a, double b, double rel_tol = 1e-11, unsigned depth = 12) {
    if (!(a < b)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, depth, rel_tol);
}

namespace detail {

template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                    int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson with Richardson correction and an absolute tolerance.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol, int depth = 40) {
    if (!(a < b)) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, abs_tol, depth);
}

}  // namespace hawkes::quad
