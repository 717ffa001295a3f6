#pragma once

// Exact Rosenthal-type bounds, the (lambda, c) parametrization of the
// extremal centered Poisson law, best constants and scans over the
// two-atom family Q_{p;A,B}.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "compound_moments.hpp"
#include "core_measures.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "poisson_moments.hpp"

namespace rosenthal {

/// The unique (lambda, c) with c^2 lambda = B and c^p lambda = A.
struct LambdaC {
    double lambda;
    double c;
};

inline LambdaC solve_lambda_c(double p, double A, double B) {
    const MomentConstraints mc(p, A, B);
    return {std::pow(std::pow(B, p / 2.0) / A, 2.0 / (p - 2.0)), std::pow(A / B, 1.0 / (p - 2.0))};
}

enum class Regime { p_ge_5, p_in_2_3, symmetric, combined, even_p_closed_form };
enum class AchievedSign { plus, minus, both };

inline const char* to_string(Regime r) {
    switch (r) {
    case Regime::p_ge_5: return "p_ge_5";
    case Regime::p_in_2_3: return "p_in_2_3";
    case Regime::symmetric: return "symmetric";
    case Regime::combined: return "combined";
    case Regime::even_p_closed_form: return "even_p_closed_form";
    }
    return "?";
}

inline const char* to_string(AchievedSign s) {
    switch (s) {
    case AchievedSign::plus: return "plus";
    case AchievedSign::minus: return "minus";
    case AchievedSign::both: return "both";
    }
    return "?";
}

struct BoundResult {
    double value = 0.0;
    Regime regime = Regime::p_ge_5;
    std::vector<LambdaC> certificate;
    AchievedSign achieved_sign = AchievedSign::both;
    double error_budget = 0.0;
};

/// Largest exponent tolerance for treating q as equal to p, or p as an
/// integer.
inline constexpr double kExponentTol = 1e-12;

inline bool is_even_integer(double p) {
    const double r = std::round(p);
    return std::abs(p - r) <= kExponentTol && static_cast<long long>(r) % 2 == 0;
}

inline double classical_rosenthal_constant(double p) {
    return std::pow(p / 2.0, p / 2.0) * std::pow(2.0, p + p * p / 4.0);
}

namespace detail {

inline constexpr double kGaussQuadRel = 1e-12;
inline constexpr double kUlp = std::numeric_limits<double>::epsilon();

inline double series_budget(std::size_t evaluations, double value, const SeriesConfig& cfg) {
    const double n = static_cast<double>(evaluations);
    return n * (cfg.tol + 4.0 * kUlp * std::abs(value));
}

inline void require_zero_mean(const DiscreteRV& x) {
    if (std::abs(rv_mean(x)) > 1e-10)
        throw NotZeroMean("the bound for p >= 5 assumes E X = 0 (got mean " + std::to_string(rv_mean(x)) + ")");
}

inline void require_p_ge_q_ge_5(double p, double q) {
    if (p > 3.0 && p < 5.0)
        throw UnsupportedExponents("no exact bound is known for p in (3,5) (p=" + std::to_string(p) + ")");
    if (!(p >= 5.0) || !(q >= 5.0) || q > p * (1.0 + kExponentTol))
        throw UnsupportedExponents("this bound requires p >= q >= 5 (p=" + std::to_string(p) +
                                   ", q=" + std::to_string(q) + ")");
}

/// max over the sign of E|X +- Y_H| for a law built from signed atoms.
struct SignedPair {
    double plus;
    double minus;
};

inline BoundResult max_over_sign(SignedPair v, const DiscreteRV& x, Regime regime,
                                 std::vector<LambdaC> cert, const SeriesConfig& cfg) {
    BoundResult r;
    r.regime = regime;
    r.certificate = std::move(cert);
    r.value = std::max(v.plus, v.minus);
    if (x.is_symmetric()) r.achieved_sign = AchievedSign::both;
    else r.achieved_sign = v.plus >= v.minus ? AchievedSign::plus : AchievedSign::minus;
    r.error_budget = series_budget(2, r.value, cfg);
    return r;
}

} // namespace detail

/// sup E|X + S|^q over independent zero-mean sequences S with
/// sum E X_i^2 <= B and sum E|X_i|^p <= A:
///   p >= q >= 5, E X = 0:  max(E|X + c Pi~_lambda|^q, E|X - c Pi~_lambda|^q)
///   2 < p <= 3, q = p:     A + E|X + sqrt(B) Z|^p
inline BoundResult exact_bound(double p, double q, double A, double B, const DiscreteRV& x,
                               const SeriesConfig& cfg = {}) {
    const MomentConstraints mc(p, A, B);
    const LambdaC lc = solve_lambda_c(p, A, B);
    if (p <= 3.0) {
        if (std::abs(q - p) > kExponentTol * p)
            throw UnsupportedExponents("for p in (2,3] the bound is only known for q = p");
        double value = A;
        for (const Atom& a : x.atoms()) value += a.weight * gaussian_abs_moment(a.value, std::sqrt(B), p);
        BoundResult r;
        r.value = value;
        r.regime = Regime::p_in_2_3;
        r.certificate = {lc};
        r.achieved_sign = x.is_symmetric() ? AchievedSign::both
                                           : AchievedSign::plus;
        r.error_budget = detail::kGaussQuadRel * value * static_cast<double>(x.size()) + 4.0 * detail::kUlp * value;
        return r;
    }
    detail::require_p_ge_q_ge_5(p, q);
    detail::require_zero_mean(x);
    const double w = lc.c * lc.c * lc.lambda;
    const double plus = cp_abs_moment(CompoundLaw{0.0, x, LevyVarianceMeasure({{lc.c, w}})}, q, cfg);
    const double minus = x.is_symmetric()
                             ? plus
                             : cp_abs_moment(CompoundLaw{0.0, x, LevyVarianceMeasure({{-lc.c, w}})}, q, cfg);
    return detail::max_over_sign({plus, minus}, x, Regime::p_ge_5, {lc}, cfg);
}

/// c^p E|Pi~_lambda|^p for even p >= 4, from the cumulant recursion.
inline BoundResult even_p_bound(double p, double A, double B) {
    if (!(p >= 4.0) || !is_even_integer(p))
        throw UnsupportedExponents("even_p_bound requires p in {4, 6, 8, ...}");
    const LambdaC lc = solve_lambda_c(p, A, B);
    const int n = static_cast<int>(std::round(p));
    BoundResult r;
    r.value = std::pow(lc.c, n) * poisson_central_moment_even(lc.lambda, n);
    r.regime = Regime::even_p_closed_form;
    r.certificate = {lc};
    r.achieved_sign = AchievedSign::both;
    r.error_budget = 8.0 * n * detail::kUlp * r.value;
    return r;
}

/// Bound over symmetric summands: E|X + c Pi_{lambda/2} - c Pi'_{lambda/2}|^q.
inline BoundResult symmetric_bound(double p, double q, double A, double B, const DiscreteRV& x,
                                   const SeriesConfig& cfg = {}) {
    const MomentConstraints mc(p, A, B);
    detail::require_p_ge_q_ge_5(p, q);
    detail::require_zero_mean(x);
    const LambdaC lc = solve_lambda_c(p, A, B);
    const double half = 0.5 * lc.c * lc.c * lc.lambda;
    BoundResult r;
    r.value = cp_abs_moment(CompoundLaw{0.0, x, LevyVarianceMeasure({{lc.c, half}, {-lc.c, half}})}, q, cfg);
    r.regime = Regime::symmetric;
    r.certificate = {lc};
    r.achieved_sign = AchievedSign::both;
    r.error_budget = detail::series_budget(1, r.value, cfg);
    return r;
}

/// Symmetric block (A0, B0) plus general block (A1, B1):
/// max over the sign of E|X + c0 Pi_{l0/2} - c0 Pi'_{l0/2} +- c1 Pi~_{l1}|^q.
inline BoundResult combined_bound(double p, double q, double A0, double B0, double A1, double B1,
                                  const DiscreteRV& x, const SeriesConfig& cfg = {}) {
    const MomentConstraints m0(p, A0, B0);
    const MomentConstraints m1(p, A1, B1);
    detail::require_p_ge_q_ge_5(p, q);
    detail::require_zero_mean(x);
    const LambdaC l0 = solve_lambda_c(p, A0, B0);
    const LambdaC l1 = solve_lambda_c(p, A1, B1);
    const double half = 0.5 * l0.c * l0.c * l0.lambda;
    const double w1 = l1.c * l1.c * l1.lambda;
    auto law = [&](double sign) {
        return CompoundLaw{0.0, x, LevyVarianceMeasure({{l0.c, half}, {-l0.c, half}, {sign * l1.c, w1}})};
    };
    const double plus = cp_abs_moment(law(1.0), q, cfg);
    const double minus = x.is_symmetric() ? plus : cp_abs_moment(law(-1.0), q, cfg);
    return detail::max_over_sign({plus, minus}, x, Regime::combined, {l0, l1}, cfg);
}

/// Dispatches to the closed form for even p with X = 0 and q = p, and to
/// exact_bound otherwise.
inline BoundResult rosenthal_bound(double p, double q, double A, double B, const DiscreteRV& x,
                                   const SeriesConfig& cfg = {}) {
    if (is_even_integer(p) && p >= 4.0 && std::abs(q - p) <= kExponentTol * p && x.is_point_mass_at_zero())
        return even_p_bound(p, A, B);
    return exact_bound(p, q, A, B, x, cfg);
}

/// C_{p;gamma} = E_{p;1/gamma,1}, the best constant in
/// E|S|^p <= C max(gamma A, B^{p/2}).
inline double best_constant(double p, double gamma, const SeriesConfig& cfg = {}) {
    if (!(gamma > 0.0)) throw std::invalid_argument("best_constant: gamma must be positive");
    return rosenthal_bound(p, p, 1.0 / gamma, 1.0, DiscreteRV(), cfg).value;
}

/// A point (c1, c2, lambda1, lambda2) of Q_{p;A,B}. A point with a zero
/// intensity is stored as (c, 0, lambda, 0).
struct QPoint {
    double c1;
    double c2;
    double lambda1;
    double lambda2;

    bool on_axis() const { return lambda2 == 0.0; }

    LevyVarianceMeasure levy() const {
        std::vector<Atom> atoms;
        if (lambda1 > 0.0) atoms.push_back({c1, c1 * c1 * lambda1});
        if (lambda2 > 0.0) atoms.push_back({c2, c2 * c2 * lambda2});
        return LevyVarianceMeasure(std::move(atoms));
    }
};

/// Solves w1 + w2 = B, |c1|^{p-2} w1 + |c2|^{p-2} w2 = A for the variance
/// weights w_i = c_i^2 lambda_i. Returns nullopt when a weight is negative
/// beyond 1e-12 (relative to B).
inline std::optional<QPoint> q_point_from_c(double p, double A, double B, double c1, double c2) {
    const MomentConstraints mc(p, A, B);
    if (c1 == 0.0 || c2 == 0.0) throw std::invalid_argument("q_point_from_c: c1 and c2 must be nonzero");
    const double a1 = std::pow(std::abs(c1), p - 2.0);
    const double a2 = std::pow(std::abs(c2), p - 2.0);
    if (std::abs(a2 - a1) <= 1e-14 * std::max(a1, a2))
        throw SingularSystem("q_point_from_c: |c1| and |c2| coincide");
    double w2 = (A - a1 * B) / (a2 - a1);
    double w1 = B - w2;
    constexpr double clamp = 1e-12;
    if (w1 < -clamp * B || w2 < -clamp * B) return std::nullopt;
    if (std::abs(w1) <= clamp * B) { w1 = 0.0; w2 = B; }
    if (std::abs(w2) <= clamp * B) { w2 = 0.0; w1 = B; }
    QPoint q{c1, c2, w1 / (c1 * c1), w2 / (c2 * c2)};
    if (q.lambda1 == 0.0) q = {q.c2, 0.0, q.lambda2, 0.0};
    else if (q.lambda2 == 0.0) q.c2 = 0.0;
    return q;
}

/// E|X + c1 Pi~_{lambda1} + c2 Pi~_{lambda2}|^q.
inline double q_point_moment(const QPoint& pt, double q, const DiscreteRV& x, const SeriesConfig& cfg = {}) {
    return cp_abs_moment(CompoundLaw{0.0, x, pt.levy()}, q, cfg);
}

/// |c| values log-spaced over [c/span, c*span] (n points) plus c itself,
/// each with both signs.
struct QGrid {
    std::size_t n = 20;
    double span = 100.0;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct QScanResult {
    QPoint best{};
    double best_value = -std::numeric_limits<double>::infinity();
    std::size_t feasible = 0;
    std::size_t evaluated = 0;
};

inline std::vector<double> q_grid_values(double c, const QGrid& grid) {
    if (grid.n < 2 || !(grid.span > 1.0)) throw std::invalid_argument("QGrid: need n >= 2 and span > 1");
    std::vector<double> mags;
    const double lo = std::log(c / grid.span);
    const double hi = std::log(c * grid.span);
    for (std::size_t i = 0; i < grid.n; ++i)
        mags.push_back(std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid.n - 1)));
    mags.push_back(c);
    std::vector<double> vals;
    for (double m : mags) {
        vals.push_back(m);
        vals.push_back(-m);
    }
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return vals;
}

/// Maximizes E|X + c1 Pi~_{l1} + c2 Pi~_{l2}|^q over the (c1, c2) grid
/// restricted to Q_{p;A,B}. Ties go to the lexicographically smallest
/// canonical (c1, c2); the result does not depend on the thread count.
inline QScanResult q_scan(double p, double q, double A, double B, const DiscreteRV& x, const QGrid& grid,
                          const SeriesConfig& cfg = {}) {
    const LambdaC lc = solve_lambda_c(p, A, B);
    const auto vals = q_grid_values(lc.c, grid);
    std::vector<QPoint> points;
    for (double c1 : vals) {
        for (double c2 : vals) {
            if (std::abs(std::abs(c1) - std::abs(c2)) <= 1e-14 * std::abs(c1)) continue;
            if (auto pt = q_point_from_c(p, A, B, c1, c2)) points.push_back(*pt);
        }
    }
    auto key_less = [](const QPoint& a, const QPoint& b) {
        return a.c1 != b.c1 ? a.c1 < b.c1 : a.c2 < b.c2;
    };
    auto key_equal = [](const QPoint& a, const QPoint& b) { return a.c1 == b.c1 && a.c2 == b.c2; };
    std::sort(points.begin(), points.end(), key_less);
    points.erase(std::unique(points.begin(), points.end(), key_equal), points.end());

    std::vector<double> values(points.size());
    detail::parallel_for(points.size(), grid.threads,
                         [&](std::size_t i) { values[i] = q_point_moment(points[i], q, x, cfg); });

    QScanResult r;
    r.feasible = points.size();
    r.evaluated = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (values[i] > r.best_value) {
            r.best_value = values[i];
            r.best = points[i];
        }
    }
    return r;
}

struct LimitRow {
    double c2;
    double moment;
    double limit;
    double gap;  // |moment - limit| / limit
};

/// Along the Q_{p;A,B} points with fixed c1 and growing |c2| the moment of
/// order p approaches A + E|X + sqrt(B) Z|^p when p is in (2,3].
inline std::vector<LimitRow> q_limit_row(double p, double A, double B, double c1, std::span<const double> c2_values,
                                         const DiscreteRV& x, const SeriesConfig& cfg = {}) {
    double limit = A;
    for (const Atom& a : x.atoms()) limit += a.weight * gaussian_abs_moment(a.value, std::sqrt(B), p);
    std::vector<LimitRow> rows;
    for (double c2 : c2_values) {
        auto pt = q_point_from_c(p, A, B, c1, c2);
        if (!pt) throw std::invalid_argument("q_limit_row: (c1, c2) outside Q_{p;A,B}");
        const double m = q_point_moment(*pt, p, x, cfg);
        rows.push_back({c2, m, limit, std::abs(m - limit) / limit});
    }
    return rows;
}

/// H = w1 delta_b + w2 delta_{c2} with w2 = a / |c2|^{q-2}, w1 = B - w2;
/// E|X + Y_H|^q tends to a + E|X + Y_{B delta_b}|^q as |c2| grows.
inline std::vector<LimitRow> limit_compound(double p, double q, double A, double B, double b, double a,
                                            std::span<const double> c2_values, const DiscreteRV& x,
                                            const SeriesConfig& cfg = {}) {
    if (!(q > 2.0)) throw std::invalid_argument("limit_compound: q must exceed 2");
    const LambdaC lc = solve_lambda_c(p, A, B);
    if (std::abs(b) > lc.c * (1.0 + 1e-12)) throw std::invalid_argument("limit_compound: b must lie in [-c, c]");
    if (a < 0.0 || a > A) throw std::invalid_argument("limit_compound: a must lie in [0, A]");
    const double limit = a + cp_abs_moment(CompoundLaw{0.0, x, LevyVarianceMeasure({{b, B}})}, q, cfg);
    std::vector<LimitRow> rows;
    for (double c2 : c2_values) {
        if (c2 == 0.0) throw std::invalid_argument("limit_compound: c2 must be nonzero");
        const double w2 = a / std::pow(std::abs(c2), q - 2.0);
        const double w1 = B - w2;
        if (w1 < 0.0) throw std::invalid_argument("limit_compound: |c2| too small for a (w1 < 0)");
        const double m = cp_abs_moment(CompoundLaw{0.0, x, LevyVarianceMeasure({{b, w1}, {c2, w2}})}, q, cfg);
        rows.push_back({c2, m, limit, std::abs(m - limit) / limit});
    }
    return rows;
}

} // namespace rosenthal
