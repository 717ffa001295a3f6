#pragma once

// Fractional moments of centered Poisson, Skellam-type and Gaussian laws.
//
// Every infinite series is truncated to a window [first, last] of Poisson
// indices together with a certified bound on what was left out: once the
// ratio of consecutive omitted terms is at most 1/2 (and keeps decreasing)
// the omitted remainder is at most twice its leading term.

#include <boost/math/special_functions/hypergeometric_1F1.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "core_measures.hpp"
#include "errors.hpp"

namespace rosenthal {

struct SeriesConfig {
    double tol = 1e-12;
    std::size_t max_terms = 1'000'000;

    void validate() const {
        if (!(tol > 0.0)) throw std::invalid_argument("SeriesConfig: tol must be positive");
        if (max_terms < 16) throw std::invalid_argument("SeriesConfig: max_terms must be >= 16");
    }
};

/// Which power function is integrated: |x|^q, (x_+)^q or (x_-)^q.
enum class Side { absolute, positive, negative };

inline double side_power(double x, double q, Side side) {
    switch (side) {
    case Side::positive: return x > 0.0 ? std::pow(x, q) : 0.0;
    case Side::negative: return x < 0.0 ? std::pow(-x, q) : 0.0;
    case Side::absolute: break;
    }
    return x == 0.0 ? 0.0 : std::pow(std::abs(x), q);
}

inline double poisson_log_pmf(std::size_t k, double lambda) {
    const double kd = static_cast<double>(k);
    return kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0);
}

/// E|Z|^q for a standard normal Z.
inline double standard_normal_abs_moment(double q) {
    return std::exp(0.5 * q * std::numbers::ln2 + std::lgamma(0.5 * (q + 1.0))) /
           std::sqrt(std::numbers::pi);
}

namespace detail {

/// Truncation window of a Poisson(lambda) index with its certified
/// remainder. `prob_weight * P(out) + moment_weight * E[|K-lambda|^q; out]`
/// is at most `remainder`, which is kept below the requested budget.
struct PoissonWindow {
    std::size_t first = 0;
    std::vector<double> pmf;  // pmf[i] = P(K = first + i)
    double remainder = 0.0;

    std::size_t last() const { return first + pmf.size() - 1; }
};

inline PoissonWindow poisson_window(double lambda, double q, double prob_weight,
                                    double moment_weight, double budget,
                                    const SeriesConfig& cfg) {
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson_window: lambda must be positive");
    auto omitted_term = [&](std::size_t k) {
        const double lp = poisson_log_pmf(k, lambda);
        const double d = std::abs(static_cast<double>(k) - lambda);
        double t = prob_weight * std::exp(lp);
        if (moment_weight > 0.0 && d > 0.0)
            t += moment_weight * std::exp(lp + q * std::log(d));
        return t;
    };
    const double half = 0.5 * budget;

    // Right end: omitted indices are last+1, last+2, ...
    const std::size_t mode = static_cast<std::size_t>(std::floor(lambda));
    std::size_t last = mode;
    double right = 0.0;
    for (;;) {
        const double k1 = static_cast<double>(last + 1);
        if (k1 > lambda) {
            // Ratio from index last+1 to last+2; it decreases further out.
            const double base = lambda / (k1 + 1.0);
            const double ratio = base * std::max(1.0, std::pow((k1 + 1.0 - lambda) / (k1 - lambda), q));
            if (ratio <= 0.5) {
                right = 2.0 * omitted_term(last + 1);
                if (right <= half) break;
            }
        }
        ++last;
        if (last - mode > cfg.max_terms)
            throw TailNotConverged("Poisson series right tail did not converge (lambda=" +
                                   std::to_string(lambda) + ")");
    }

    // Left end: omitted indices are first-1, first-2, ..., 0.
    std::size_t first = mode;
    double left = 0.0;
    while (first > 0) {
        const double k = static_cast<double>(first - 1);
        if (k < lambda) {
            // Ratio from index k to k-1; it decreases further left.
            const double ratio =
                (k / lambda) * std::max(1.0, std::pow((lambda - k + 1.0) / (lambda - k), q));
            if (ratio <= 0.5) {
                left = 2.0 * omitted_term(first - 1);
                if (left <= half) break;
            }
        }
        --first;
        if (last - first + 1 > cfg.max_terms)
            throw TailNotConverged("Poisson series left tail did not converge (lambda=" +
                                   std::to_string(lambda) + ")");
    }
    if (first == 0) left = 0.0;
    if (last - first + 1 > cfg.max_terms)
        throw TailNotConverged("Poisson series window exceeds max_terms");

    PoissonWindow w;
    w.first = first;
    w.pmf.resize(last - first + 1);
    for (std::size_t k = first; k <= last; ++k)
        w.pmf[k - first] = std::exp(poisson_log_pmf(k, lambda));
    w.remainder = left + right;
    return w;
}

} // namespace detail

/// E|Pi_lambda - lambda|^q.
inline double poisson_part_moment(double lambda, double q, Side side,
                                  const SeriesConfig& cfg = {}) {
    cfg.validate();
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson moment: lambda must be positive");
    if (!(q > 0.0)) throw std::invalid_argument("poisson moment: q must be positive");
    const auto w = detail::poisson_window(lambda, q, 0.0, 1.0, cfg.tol, cfg);
    double sum = 0.0;
    for (std::size_t i = 0; i < w.pmf.size(); ++i)
        sum += w.pmf[i] * side_power(static_cast<double>(w.first + i) - lambda, q, side);
    return sum;
}

inline double poisson_abs_central_moment(double lambda, double q, const SeriesConfig& cfg = {}) {
    return poisson_part_moment(lambda, q, Side::absolute, cfg);
}

/// E(Pi_lambda - lambda)^n for even n from the cumulants
/// kappa_1 = 0, kappa_j = lambda (j >= 2).
inline double poisson_central_moment_even(double lambda, int n) {
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson_central_moment_even: lambda must be positive");
    if (n < 2 || n % 2 != 0)
        throw std::invalid_argument("poisson_central_moment_even: n must be an even integer >= 2");
    std::vector<double> m(static_cast<std::size_t>(n) + 1, 0.0);
    m[0] = 1.0;
    for (int j = 1; j <= n; ++j) {
        double acc = 0.0;
        double binom = 1.0;  // C(j-1, i)
        for (int i = 0; i <= j - 1; ++i) {
            const double kappa = (i == 0) ? 0.0 : lambda;
            acc += binom * kappa * m[static_cast<std::size_t>(j - 1 - i)];
            binom = binom * (j - 1 - i) / (i + 1);
        }
        m[static_cast<std::size_t>(j)] = acc;
    }
    return m[static_cast<std::size_t>(n)];
}

namespace detail {

/// Positive part E(m + sZ)_+^q by quadrature; the power's kink sits at
/// y = 0 and the density peak at y = m splits the range further.
inline double gaussian_positive_quadrature(double mean, double sd, double q) {
    const double inv_s = 1.0 / sd;
    const double norm = inv_s / std::sqrt(2.0 * std::numbers::pi);
    auto f = [&](double y) {
        if (y <= 0.0) return 0.0;
        const double t = (y - mean) * inv_s;
        return std::exp(q * std::log(y) - 0.5 * t * t) * norm;
    };
    constexpr double rel = 1e-13;
    double total = 0.0;
    double start = 0.0;
    if (mean > 0.0) {
        boost::math::quadrature::tanh_sinh<double> ts;
        total += ts.integrate(f, 0.0, mean, rel);
        start = mean;
    }
    boost::math::quadrature::exp_sinh<double> es;
    auto shifted = [&](double y) { return f(start + y); };
    total += es.integrate(shifted, 0.0, std::numeric_limits<double>::infinity(), rel);
    return total;
}

} // namespace detail

/// E(m + sZ)^q on the requested side, Z standard normal. With a = m/s,
///   E|a + Z|^q        = 2^{q/2} Gamma((q+1)/2)/sqrt(pi) 1F1(-q/2; 1/2; -a^2/2),
///   E (a+Z)|a+Z|^{q-1} = a 2^{(q+1)/2} Gamma(q/2+1)/sqrt(pi) 1F1((1-q)/2; 3/2; -a^2/2),
/// and the one-sided parts are their half-sum and half-difference. A part
/// that is tiny next to the absolute moment is recomputed by quadrature to
/// avoid the cancellation.
inline double gaussian_part_moment(double mean, double sd, double q, Side side) {
    if (!(q > 0.0)) throw std::invalid_argument("gaussian moment: q must be positive");
    if (!(sd >= 0.0)) throw std::invalid_argument("gaussian moment: sd must be nonnegative");
    if (sd == 0.0) return side_power(mean, q, side);
    const double scale = std::pow(sd, q);
    if (mean == 0.0) {
        const double full = standard_normal_abs_moment(q) * scale;
        return side == Side::absolute ? full : 0.5 * full;
    }
    const double a = mean / sd;
    const double z = -0.5 * a * a;
    const double abs_part = std::pow(2.0, 0.5 * q) * std::tgamma(0.5 * (q + 1.0)) / std::sqrt(std::numbers::pi) *
                            boost::math::hypergeometric_1F1(-0.5 * q, 0.5, z);
    if (side == Side::absolute) return scale * abs_part;
    const double signed_part = a * std::pow(2.0, 0.5 * (q + 1.0)) * std::tgamma(0.5 * q + 1.0) /
                               std::sqrt(std::numbers::pi) * boost::math::hypergeometric_1F1(0.5 * (1.0 - q), 1.5, z);
    const double part = 0.5 * (side == Side::positive ? abs_part + signed_part : abs_part - signed_part);
    if (part >= 1e-3 * abs_part) return scale * part;
    return side == Side::positive ? detail::gaussian_positive_quadrature(mean, sd, q)
                                  : detail::gaussian_positive_quadrature(-mean, sd, q);
}

inline double gaussian_abs_moment(double mean, double sd, double q) {
    return gaussian_part_moment(mean, sd, q, Side::absolute);
}

/// One summand scale * (Pi_lambda - lambda) of a lattice sum.
struct PoissonComponent {
    double scale;
    double lambda;
};

namespace detail {

/// E g(b + sum_i scale_i (K_i - lambda_i)) where b is drawn from `base`
/// (weights are probabilities), K_i ~ Poisson(lambda_i) independent and g
/// is the side power of an independent N(b', sd^2) shift. The omitted part
/// of the nested series is certified below cfg.tol.
inline double lattice_moment(std::span<const Atom> base, std::span<const PoissonComponent> comps,
                             double sd, double q, Side side, const SeriesConfig& cfg) {
    cfg.validate();
    const std::size_t m = comps.size();
    if (m == 0) {
        double s = 0.0;
        for (const Atom& a : base) s += a.weight * gaussian_part_moment(a.value, sd, q, side);
        return s;
    }

    // |sum of n terms|^q <= n^{max(q-1,0)} sum |term|^q.
    const double n_terms = static_cast<double>(m + 2);
    const double cq = std::pow(n_terms, std::max(q - 1.0, 0.0));
    double base_max = 0.0;
    for (const Atom& a : base) base_max = std::max(base_max, std::pow(std::abs(a.value), q));
    std::vector<double> comp_moment(m);
    SeriesConfig inner = cfg;
    for (std::size_t i = 0; i < m; ++i)
        comp_moment[i] = std::pow(std::abs(comps[i].scale), q) *
                         (poisson_abs_central_moment(comps[i].lambda, q, inner) + cfg.tol);
    const double gauss_moment = sd > 0.0 ? std::pow(sd, q) * standard_normal_abs_moment(q) : 0.0;

    std::vector<PoissonWindow> windows;
    windows.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        double rest = base_max + gauss_moment;
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) rest += comp_moment[j];
        windows.push_back(poisson_window(comps[i].lambda, q, cq * rest,
                                         cq * std::pow(std::abs(comps[i].scale), q),
                                         cfg.tol / static_cast<double>(m), cfg));
    }

    std::vector<std::vector<double>> offsets(m);
    for (std::size_t i = 0; i < m; ++i) {
        offsets[i].resize(windows[i].pmf.size());
        for (std::size_t k = 0; k < offsets[i].size(); ++k)
            offsets[i][k] = comps[i].scale * (static_cast<double>(windows[i].first + k) - comps[i].lambda);
    }

    double total = 0.0;
    auto recurse = [&](auto&& self, std::size_t level, double shift, double prob) -> void {
        const auto& pmf = windows[level].pmf;
        const auto& off = offsets[level];
        if (level + 1 == m) {
            for (std::size_t k = 0; k < pmf.size(); ++k) {
                const double x = shift + off[k];
                const double g = sd > 0.0 ? gaussian_part_moment(x, sd, q, side) : side_power(x, q, side);
                total += prob * pmf[k] * g;
            }
            return;
        }
        for (std::size_t k = 0; k < pmf.size(); ++k) self(self, level + 1, shift + off[k], prob * pmf[k]);
    };
    for (const Atom& a : base) recurse(recurse, 0, a.value, a.weight);
    return total;
}

} // namespace detail

/// E|c (Pi_{lambda1} - Pi'_{lambda2})|^q for independent Poisson variables.
inline double skellam_abs_moment(double lambda1, double lambda2, double c, double q,
                                 const SeriesConfig& cfg = {}) {
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
        throw std::invalid_argument("skellam_abs_moment: intensities must be positive");
    if (!(q > 0.0)) throw std::invalid_argument("skellam_abs_moment: q must be positive");
    if (c == 0.0) return 0.0;
    const Atom shift{c * (lambda1 - lambda2), 1.0};
    const PoissonComponent comps[] = {{c, lambda1}, {-c, lambda2}};
    return detail::lattice_moment(std::span(&shift, 1), comps, 0.0, q, Side::absolute, cfg);
}

} // namespace rosenthal
