#pragma once

// Brute-force reference computations, deliberately independent of the
// library's engines: plain truncated sums in long double, hand-rolled
// quadrature and direct finite differences.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using real = long double;

/// Poisson pmf for k = 0..kmax by the recurrence p_k = p_{k-1} lambda / k.
inline std::vector<real> poisson_pmf(double lambda, int kmax) {
    std::vector<real> p(kmax + 1);
    p[0] = std::exp(-static_cast<real>(lambda));
    for (int k = 1; k <= kmax; ++k) p[k] = p[k - 1] * lambda / k;
    return p;
}

/// E|c (Pi_lambda - lambda)|^q, truncated at kmax.
inline double centered_poisson_abs_moment(double lambda, double q, double c = 1.0, int kmax = 200) {
    const auto p = poisson_pmf(lambda, kmax);
    real s = 0;
    for (int k = 0; k <= kmax; ++k) s += p[k] * std::pow(std::abs(static_cast<real>(c) * (k - lambda)), q);
    return static_cast<double>(s);
}

/// Raw moments of a Poisson law about its mean, integer order, by direct sum.
inline double centered_poisson_moment(double lambda, int n, int kmax = 200) {
    const auto p = poisson_pmf(lambda, kmax);
    real s = 0;
    for (int k = 0; k <= kmax; ++k) s += p[k] * std::pow(static_cast<real>(k - lambda), n);
    return static_cast<double>(s);
}

struct Component {
    double scale;   // u
    double lambda;  // intensity
};

/// E|x0 + sum_j v_j P(X = v_j) + sum_i u_i (Pi_i - lambda_i)|^q by nested
/// loops over every Poisson count up to kmax.
inline double nested_moment(double x0, const std::vector<std::pair<double, double>>& background,
                            const std::vector<Component>& comps, double q, int kmax = 60) {
    std::vector<std::vector<real>> pmfs;
    real shift = x0;
    for (const auto& c : comps) {
        pmfs.push_back(poisson_pmf(c.lambda, kmax));
        shift -= static_cast<real>(c.scale) * c.lambda;
    }
    real total = 0;
    std::function<void(std::size_t, real, real)> rec = [&](std::size_t i, real value, real prob) {
        if (i == comps.size()) {
            for (const auto& [v, w] : background) total += prob * w * std::pow(std::abs(value + v), q);
            return;
        }
        for (int k = 0; k <= kmax; ++k) rec(i + 1, value + static_cast<real>(comps[i].scale) * k, prob * pmfs[i][k]);
    };
    rec(0, shift, 1);
    return static_cast<double>(total);
}

/// E|m + s Z|^q by the trapezoid rule on [m - 14 s, m + 14 s]. Each side
/// of the kink at y = 0 is mapped through y = +-t^2, which smooths |y|^q.
inline double gaussian_abs_moment(double m, double s, double q, int n = 40000) {
    if (s == 0.0) return std::pow(std::abs(m), q);
    const real lo = m - 14.0L * s;
    const real hi = m + 14.0L * s;
    auto f = [&](real y) {
        const real z = (y - m) / s;
        return std::pow(std::abs(y), static_cast<real>(q)) * std::exp(-z * z / 2) /
               (s * std::sqrt(2 * std::numbers::pi_v<real>));
    };
    auto trap = [&](auto g, real a, real b) {
        if (b <= a) return static_cast<real>(0);
        const real h = (b - a) / n;
        real acc = (g(a) + g(b)) / 2;
        for (int i = 1; i < n; ++i) acc += g(a + i * h);
        return acc * h;
    };
    auto right = [&](real t) { return 2 * t * f(t * t); };
    auto left = [&](real t) { return 2 * t * f(-t * t); };
    if (lo < 0 && hi > 0) return static_cast<double>(trap(left, 0, std::sqrt(-lo)) + trap(right, 0, std::sqrt(hi)));
    if (hi <= 0) return static_cast<double>(trap(left, std::sqrt(-hi), std::sqrt(-lo)));
    return static_cast<double>(trap(right, std::sqrt(lo), std::sqrt(hi)));
}

/// Binomial(n, pi) pmf through lgamma in long double.
inline real binomial_pmf(int n, int k, real pi) {
    return std::exp(std::lgamma(static_cast<real>(n) + 1) - std::lgamma(static_cast<real>(k) + 1) -
                    std::lgamma(static_cast<real>(n - k) + 1) + k * std::log(pi) + (n - k) * std::log1p(-pi));
}

/// Richardson-extrapolated central difference with steps h and h / 10.
template <class F>
double first_derivative(F&& f, double h) {
    auto d = [&](double s) { return (f(s) - f(-s)) / (2 * s); };
    return (100 * d(h / 10) - d(h)) / 99;
}

/// One-sided version: (-3 f(0) + 4 f(h) - f(2h)) / 2h, extrapolated.
template <class F>
double first_derivative_right(F&& f, double h) {
    auto d = [&](double s) { return (-3 * f(0) + 4 * f(s) - f(2 * s)) / (2 * s); };
    return (100 * d(h / 10) - d(h)) / 99;
}

/// Richardson-extrapolated central second difference with steps h and h/2.
template <class F>
double second_derivative(F&& f, double h) {
    auto d = [&](double s) { return (f(s) - 2 * f(0) + f(-s)) / (s * s); };
    return (4 * d(h / 2) - d(h)) / 3;
}

} // namespace oracle
