#pragma once

// Composite Gauss-Legendre integration with local node doubling: a panel
// is accepted when its 32-node value matches the sum over its two halves.

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <string>

#include "errors.hpp"

namespace rosenthal::quad {

struct Tolerance {
    double abs = 1e-12;
    double rel = 1e-10;
    int max_depth = 40;
};

namespace detail {

template <class F>
double gl32(F& f, double a, double b) {
    return boost::math::quadrature::gauss<double, 32>::integrate(f, a, b);
}

template <class F>
double refine(F& f, double a, double b, double whole, double tol, int depth, int max_depth) {
    const double mid = 0.5 * (a + b);
    const double left = gl32(f, a, mid);
    const double right = gl32(f, mid, b);
    const double both = left + right;
    if (std::abs(both - whole) <= tol) return both;
    if (depth >= max_depth)
        throw QuadratureNotConverged("Gauss-Legendre refinement exceeded depth " + std::to_string(max_depth));
    return refine(f, a, mid, left, 0.5 * tol, depth + 1, max_depth) +
           refine(f, mid, b, right, 0.5 * tol, depth + 1, max_depth);
}

} // namespace detail

template <class F>
double integrate(F&& f, double a, double b, const Tolerance& tol = {}) {
    if (a == b) return 0.0;
    const double whole = detail::gl32(f, a, b);
    const double target = std::max(tol.abs, tol.rel * std::abs(whole));
    return detail::refine(f, a, b, whole, target, 0, tol.max_depth);
}

/// Iterated integral over [a1,b1] x [a2,b2] of f(x, y), inner variable y.
template <class F>
double integrate_2d(F&& f, double a1, double b1, double a2, double b2, const Tolerance& tol = {}) {
    auto outer = [&](double x) {
        return integrate([&](double y) { return f(x, y); }, a2, b2, tol);
    };
    return integrate(outer, a1, b1, tol);
}

} // namespace rosenthal::quad
