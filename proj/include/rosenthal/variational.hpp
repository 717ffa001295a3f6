#pragma once

// Derivatives of moments of X + Y_{H + t Delta} along a perturbation of the
// variance measure, expressed through lower-order moments, and the kernel
// whose positivity excludes two-atom maximizers.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "compound_moments.hpp"
#include "core_measures.hpp"
#include "errors.hpp"
#include "quadrature.hpp"

namespace rosenthal {

/// t -> H + t * Delta for t in [0, t_max], nonnegative along the way.
class PerturbationPath {
public:
    PerturbationPath(LevyVarianceMeasure base, SignedAtomMeasure direction, double t_max)
        : base_(std::move(base)), direction_(std::move(direction)), t_max_(t_max) {
        if (!(t_max_ > 0.0)) throw std::invalid_argument("PerturbationPath: t_max must be positive");
        // Linear in t, so nonnegativity at both ends suffices.
        if (!perturbed(base_, direction_, t_max_))
            throw InfeasiblePath("PerturbationPath: H + t*Delta negative at t_max");
    }

    const LevyVarianceMeasure& base() const { return base_; }
    const SignedAtomMeasure& direction() const { return direction_; }
    double t_max() const { return t_max_; }

    LevyVarianceMeasure at(double t) const {
        auto h = perturbed(base_, direction_, t);
        if (!h) throw InfeasiblePath("H + t*Delta is not a nonnegative measure at t=" + std::to_string(t));
        return *h;
    }

    /// True when H + t*Delta stays nonnegative for t slightly below zero,
    /// i.e. a two-sided difference quotient is meaningful at t = 0.
    bool two_sided_at_zero() const {
        for (const Atom& d : direction_.atoms()) {
            if (d.weight <= 0.0) continue;
            bool covered = false;
            for (const Atom& h : base_.atoms())
                if (h.value == d.value && h.weight > 0.0) covered = true;
            if (!covered) return false;
        }
        return true;
    }

private:
    LevyVarianceMeasure base_;
    SignedAtomMeasure direction_;
    double t_max_;
};

namespace detail {

inline quad::Tolerance variation_tolerance(const SeriesConfig& cfg) {
    return {cfg.tol, 1e-11, 40};
}

inline double shifted_moment(double shift, const DiscreteRV& x, const LevyVarianceMeasure& h, double r,
                             Side side, const SeriesConfig& cfg) {
    return cp_part_moment(CompoundLaw{shift, x, h}, r, side, cfg);
}

} // namespace detail

/// h(x) = q(q-1) E|x + X + Y_H|^{q-2}.
inline double h_kernel(double x, double q, const DiscreteRV& background, const LevyVarianceMeasure& h,
                       const SeriesConfig& cfg = {}) {
    if (!(q > 2.0)) throw std::invalid_argument("h_kernel: q must exceed 2");
    return q * (q - 1.0) * cp_abs_moment(CompoundLaw{x, background, h}, q - 2.0, cfg);
}

/// h''(x) = q(q-1)(q-2)(q-3) E|x + X + Y_H|^{q-4}.
inline double h_kernel_second(double x, double q, const DiscreteRV& background,
                              const LevyVarianceMeasure& h, const SeriesConfig& cfg = {}) {
    if (!(q > 4.0)) throw ExponentTooSmall("h'' requires q > 4");
    return q * (q - 1.0) * (q - 2.0) * (q - 3.0) *
           cp_abs_moment(CompoundLaw{x, background, h}, q - 4.0, cfg);
}

namespace detail {

/// K(v) = int int (1-s1)(1-s2) delta(v - s1 u1 - s2 u2) ds1 ds2 over [0,1]^2,
/// u1, u2 nonzero: a piecewise cubic with breaks at 0, u1, u2, u1 + u2.
inline double pair_kernel(double u1, double u2, double v) {
    // s2 = (v - s1 u1) / u2 in [0, 1] pins s1 u1 between v - u2 and v.
    double lo = std::min(v - u2, v) / u1;
    double hi = std::max(v - u2, v) / u1;
    if (lo > hi) std::swap(lo, hi);
    lo = std::max(lo, 0.0);
    hi = std::min(hi, 1.0);
    if (hi <= lo) return 0.0;
    // Integrand (1 - s)(alpha + beta s) in s = s1.
    const double alpha = 1.0 - v / u2;
    const double beta = u1 / u2;
    auto prim = [&](double x) { return alpha * x + 0.5 * (beta - alpha) * x * x - beta * x * x * x / 3.0; };
    return (prim(hi) - prim(lo)) / std::abs(u2);
}

/// int_0^1 int_0^1 (1-s1)(1-s2) g(s1 u1 + s2 u2) ds1 ds2 as the single
/// integral int g(v) K(v) dv, split at the breaks of K.
template <class G>
double pair_integral(double u1, double u2, G&& g, const quad::Tolerance& tol) {
    std::vector<double> breaks = {0.0, u1, u2, u1 + u2};
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        total += quad::integrate([&](double v) { return pair_kernel(u1, u2, v) * g(v); }, breaks[i], breaks[i + 1],
                                 tol);
    return total;
}

/// Side powers P_m(x) = E pow_side(x + W)^m and their slopes D_m with
/// P_m' = m D_{m-1}, for W = X + Y_H. Together with P_m'' = m(m-1) P_{m-2}
/// they turn the (1-s)-weighted s-integrals into Taylor remainders.
class SidePowers {
public:
    SidePowers(const DiscreteRV& x, const LevyVarianceMeasure& h, Side side, const SeriesConfig& cfg)
        : x_(x), h_(h), side_(side), cfg_(cfg) {}

    double P(double shift, double m) const { return shifted_moment(shift, x_, h_, m, side_, cfg_); }

    double D(double shift, double m) const {
        const double pos = side_ == Side::negative ? 0.0 : shifted_moment(shift, x_, h_, m, Side::positive, cfg_);
        const double neg = side_ == Side::positive ? 0.0 : shifted_moment(shift, x_, h_, m, Side::negative, cfg_);
        return pos - neg;
    }

    /// Root mean square of W; sets the scale below which the remainder
    /// formulas cancel too much.
    double spread() const {
        double m2 = h_.total_weight();
        for (const Atom& a : x_.atoms()) m2 += a.weight * a.value * a.value;
        return std::sqrt(m2);
    }

private:
    const DiscreteRV& x_;
    const LevyVarianceMeasure& h_;
    Side side_;
    const SeriesConfig& cfg_;
};

// Relative size of |u| against spread(W) above which the closed forms are used.
inline constexpr double kFirstRemainderMin = 1e-3;
inline constexpr double kSecondRemainderMin = 1e-2;

} // namespace detail

/// Right derivative in t of E(X + Y_{H_t})^q on the given side:
/// q(q-1) sum_j d_j int_0^1 (1-s) E(s u_j + X + Y_{H_t})^{q-2} ds.
/// For u != 0 the s-integral equals [P_q(u) - P_q(0) - q u D_{q-1}(0)] / (q(q-1) u^2).
inline double first_variation(const PerturbationPath& path, double q, const DiscreteRV& background,
                              double t, const SeriesConfig& cfg = {}, Side side = Side::absolute) {
    if (!(q > 2.0)) throw std::invalid_argument("first_variation: q must exceed 2");
    if (t < 0.0 || t >= path.t_max()) throw std::invalid_argument("first_variation: t outside [0, t_max)");
    const LevyVarianceMeasure ht = path.at(t);
    const auto tol = detail::variation_tolerance(cfg);
    const detail::SidePowers pw(background, ht, side, cfg);
    const double scale = pw.spread();
    std::optional<double> p0, d0;
    double total = 0.0;
    for (const Atom& d : path.direction().atoms()) {
        const double u = d.value;
        double term = 0.0;
        if (u == 0.0) {
            term = 0.5 * q * (q - 1.0) * pw.P(0.0, q - 2.0);
        } else if (std::abs(u) >= detail::kFirstRemainderMin * scale) {
            if (!p0) p0 = pw.P(0.0, q);
            if (!d0) d0 = pw.D(0.0, q - 1.0);
            term = (pw.P(u, q) - *p0 - q * u * *d0) / (u * u);
        } else {
            term = q * (q - 1.0) *
                   quad::integrate([&](double s) { return (1.0 - s) * pw.P(s * u, q - 2.0); }, 0.0, 1.0, tol);
        }
        total += d.weight * term;
    }
    return total;
}

/// Second right derivative in t, q > 4:
/// q(q-1)(q-2)(q-3) sum_{j,k} d_j d_k
///   int int (1-s1)(1-s2) E(s1 u_j + s2 u_k + X + Y_{H_t})^{q-4} ds1 ds2,
/// with the double integral reduced to values of P_q, D_{q-1}, P_{q-2} by
/// applying the Taylor-remainder identity in each variable.
inline double second_variation(const PerturbationPath& path, double q, const DiscreteRV& background,
                               double t, const SeriesConfig& cfg = {}, Side side = Side::absolute) {
    if (!(q > 4.0)) throw ExponentTooSmall("second_variation requires q > 4");
    if (t < 0.0 || t >= path.t_max()) throw std::invalid_argument("second_variation: t outside [0, t_max)");
    const LevyVarianceMeasure ht = path.at(t);
    const auto tol = detail::variation_tolerance(cfg);
    const detail::SidePowers pw(background, ht, side, cfg);
    const double scale = pw.spread();
    const double c4 = q * (q - 1.0) * (q - 2.0) * (q - 3.0);
    const double r = q - 4.0;
    auto g = [&](double shift) { return pw.P(shift, r); };
    // c4 F = P_q, c4 F' = q D_{q-1}, c4 f = q(q-1) P_{q-2}, with F'' = f, f'' = g.
    auto F = [&](double x) { return pw.P(x, q); };
    auto dF = [&](double x) { return q * pw.D(x, q - 1.0); };
    auto f = [&](double x) { return q * (q - 1.0) * pw.P(x, q - 2.0); };

    const auto atoms = path.direction().atoms();
    double total = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        for (std::size_t k = j; k < atoms.size(); ++k) {
            const double u1 = atoms[j].value;
            const double u2 = atoms[k].value;
            double pair = 0.0;  // c4 times the double integral
            if (u1 == 0.0 && u2 == 0.0) {
                pair = 0.25 * c4 * g(0.0);
            } else if (u1 == 0.0 || u2 == 0.0) {
                const double u = u1 == 0.0 ? u2 : u1;
                if (std::abs(u) >= detail::kSecondRemainderMin * scale) {
                    // f'' = g with c4 f = q(q-1) P_{q-2} and c4 f' = q(q-1)(q-2) D_{q-3}.
                    const double fu = q * (q - 1.0) * pw.P(u, q - 2.0);
                    const double f0 = q * (q - 1.0) * pw.P(0.0, q - 2.0);
                    const double df0 = q * (q - 1.0) * (q - 2.0) * pw.D(0.0, q - 3.0);
                    pair = 0.5 * (fu - f0 - u * df0) / (u * u);
                } else {
                    pair = 0.5 * c4 * quad::integrate([&](double s) { return (1.0 - s) * g(s * u); }, 0.0, 1.0, tol);
                }
            } else if (std::min(std::abs(u1), std::abs(u2)) >= detail::kSecondRemainderMin * scale) {
                const double F0 = F(0.0), dF0 = dF(0.0);
                const double a1 = (F(u1 + u2) - F(u2) - u1 * dF(u2)) / (u1 * u1);
                const double a2 = (F(u1) - F0 - u1 * dF0) / (u1 * u1);
                const double a3 = (dF(u1) - dF0 - u1 * f(0.0)) / (u1 * u1);
                pair = (a1 - a2 - u2 * a3) / (u2 * u2);
            } else {
                pair = c4 * detail::pair_integral(u1, u2, g, tol);
            }
            const double mult = (j == k) ? 1.0 : 2.0;
            total += mult * atoms[j].weight * atoms[k].weight * pair;
        }
    }
    return total;
}

namespace detail {

inline void check_kernel_preconditions(double p, double q, const DiscreteRV& background,
                                       const LevyVarianceMeasure& h) {
    if (!(q > 5.0) || !(p >= q))
        throw std::invalid_argument("positivity kernel requires p >= q > 5");
    if (std::abs(rv_mean(background)) > 1e-10) throw NotZeroMean("positivity kernel requires E X = 0");
    if (h.empty()) throw std::invalid_argument("positivity kernel requires H != 0");
}

} // namespace detail

/// h''(u a s) - u^{p-4} h''(a s).
inline double positivity_kernel(double u, double alpha, double s, double p, double q,
                                const DiscreteRV& background, const LevyVarianceMeasure& h,
                                const SeriesConfig& cfg = {}) {
    detail::check_kernel_preconditions(p, q, background, h);
    for (double v : {u, alpha, s})
        if (v < 0.0 || v > 1.0) throw std::invalid_argument("positivity kernel arguments must lie in [0,1]");
    return h_kernel_second(u * alpha * s, q, background, h, cfg) -
           std::pow(u, p - 4.0) * h_kernel_second(alpha * s, q, background, h, cfg);
}

/// s^2 int_b^1 du int_0^1 da a [h''(u a s) - u^{p-4} h''(a s)].
/// The second term separates into (1 - b^{p-3})/(p-3) * int_0^1 a h''(a s) da,
/// and by parts int_0^1 a h''(y a) da = [y h'(y) - h(y) + h(0)] / y^2, which
/// leaves one quadrature in u (the a-integral is done numerically when y is
/// too small for the difference to be accurate).
inline double variational_F(double b, double s, double p, double q, const DiscreteRV& background,
                            const LevyVarianceMeasure& h, const SeriesConfig& cfg = {}) {
    detail::check_kernel_preconditions(p, q, background, h);
    if (b < 0.0 || b > 1.0) throw std::invalid_argument("variational_F: b must lie in [0,1]");
    if (s < 0.0 || s > 1.0) throw std::invalid_argument("variational_F: s must lie in [0,1]");
    if (b == 1.0 || s == 0.0) return 0.0;
    const auto tol = detail::variation_tolerance(cfg);
    const detail::SidePowers pw(background, h, Side::absolute, cfg);
    const double y_min = detail::kSecondRemainderMin * pw.spread();
    const double h0 = q * (q - 1.0) * pw.P(0.0, q - 2.0);
    auto radial = [&](double y) {
        if (y < y_min) {
            auto hpp = [&](double x) { return h_kernel_second(x, q, background, h, cfg); };
            return quad::integrate([&](double a) { return a * hpp(a * y); }, 0.0, 1.0, tol);
        }
        const double hy = q * (q - 1.0) * pw.P(y, q - 2.0);
        const double dhy = q * (q - 1.0) * (q - 2.0) * pw.D(y, q - 3.0);
        return (y * dhy - hy + h0) / (y * y);
    };
    const double first = quad::integrate([&](double u) { return radial(u * s); }, b, 1.0, tol);
    const double second = (1.0 - std::pow(b, p - 3.0)) / (p - 3.0) * radial(s);
    return s * s * (first - second);
}

} // namespace rosenthal
