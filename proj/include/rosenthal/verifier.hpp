#pragma once

// Brute-force checks of the exact bounds on explicit sums of independent
// zero-mean discrete random variables, domination by the accompanying
// compound Poisson law, and the near-extremal binomial construction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>


#include "compound_moments.hpp"
#include "core_measures.hpp"
#include "errors.hpp"
#include "extremal_bounds.hpp"
#include "variational.hpp"

namespace rosenthal {

inline constexpr std::size_t kMaxConvolutionSupport = 1'000'000;

/// Independent zero-mean summands X_1, ..., X_n.
class RVSequence {
public:
    RVSequence() = default;

    explicit RVSequence(std::vector<DiscreteRV> members) : members_(std::move(members)) {
        for (const auto& m : members_)
            if (std::abs(rv_mean(m)) > 1e-10)
                throw NotZeroMean("RVSequence: members must have zero mean");
    }

    std::span<const DiscreteRV> members() const { return members_; }
    std::size_t size() const { return members_.size(); }

    double sum_second_moment() const {
        double b = 0.0;
        for (const auto& m : members_) b += rv_abs_moment(m, 2.0);
        return b;
    }

    double sum_p_moment(double p) const {
        double a = 0.0;
        for (const auto& m : members_) a += rv_abs_moment(m, p);
        return a;
    }

    RVSequence appended(DiscreteRV x) const {
        auto m = members_;
        m.push_back(std::move(x));
        return RVSequence(std::move(m));
    }

private:
    std::vector<DiscreteRV> members_;
};

/// Law of x + X_1 + ... + X_n by repeated convolution.
inline DiscreteRV sum_law(const RVSequence& seq, const DiscreteRV& x = DiscreteRV()) {
    DiscreteRV s = x;
    for (const auto& m : seq.members()) {
        if (s.size() * m.size() > kMaxConvolutionSupport)
            throw SupportTooLarge("convolution support exceeds 1e6 atoms");
        s = rv_convolve(s, m);
    }
    return s;
}

/// E|S|^q for S = X_1 + ... + X_n, exact up to rounding.
inline double sum_abs_moment(const RVSequence& seq, double q) {
    if (seq.size() == 0) return 0.0;
    return rv_abs_moment(sum_law(seq), q);
}

enum class CheckStatus { pass, fail, skipped };

inline const char* to_string(CheckStatus s) {
    switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::skipped: return "skipped";
    }
    return "?";
}

struct CheckReport {
    std::uint64_t case_id = 0;
    std::uint64_t seed = 0;
    double p = 0.0;
    double q = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double error_budget = 0.0;
    CheckStatus status = CheckStatus::pass;
    std::string note;
};

namespace detail {

inline CheckReport finish_report(CheckReport r) {
    r.slack = r.rhs - r.lhs;
    r.status = r.slack >= -r.error_budget ? CheckStatus::pass : CheckStatus::fail;
    return r;
}

inline double rounding_budget(double value, std::size_t terms) {
    return 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(terms + 1) * std::abs(value);
}

} // namespace detail

/// E|X + S|^q against the exact bound at the sequence's own
/// (A', B') = (sum E|X_i|^p, sum E X_i^2).
inline CheckReport check_rosenthal(const RVSequence& seq, double p, double q, const DiscreteRV& x,
                                   const SeriesConfig& cfg = {}) {
    CheckReport r;
    r.p = p;
    r.q = q;
    const DiscreteRV total = sum_law(seq, x);
    r.lhs = rv_abs_moment(total, q);
    const double b = seq.sum_second_moment();
    const double a = seq.sum_p_moment(p);
    double budget = detail::rounding_budget(r.lhs, total.size());
    if (b <= 0.0 || a <= 0.0) {
        // S = 0 almost surely; the supremum over the empty class is E|X|^q.
        r.rhs = rv_abs_moment(x, q);
        budget += detail::rounding_budget(r.rhs, x.size());
        r.note = "degenerate sequence";
    } else {
        const BoundResult bound = rosenthal_bound(p, q, a, b, x, cfg);
        r.rhs = bound.value;
        budget += bound.error_budget;
    }
    r.error_budget = budget;
    return detail::finish_report(r);
}

/// Sum-of-tails measure G(E) = sum_i P(X_i in E \ {0}), returned in
/// variance units H(du) = u^2 G(du) so that Y_H has the law of X_G.
inline LevyVarianceMeasure accompanying_measure(const RVSequence& seq) {
    std::vector<Atom> tails;
    for (const auto& m : seq.members())
        for (const Atom& a : m.atoms())
            if (a.value != 0.0) tails.push_back(a);
    tails = detail::merge_sorted(std::move(tails), kAtomMergeTol);
    std::vector<Atom> h;
    h.reserve(tails.size());
    for (const Atom& t : tails) h.push_back({t.value, t.value * t.value * t.weight});
    return LevyVarianceMeasure(std::move(h));
}

/// E|S|^q <= E|X_G|^q for q >= 3. Measures with more than three atoms are
/// evaluated by the contour engine; failures there are reported as skipped.
inline CheckReport check_domination(const RVSequence& seq, double q, const SeriesConfig& cfg = {}) {
    if (!(q >= 3.0)) throw std::invalid_argument("check_domination requires q >= 3");
    CheckReport r;
    r.p = q;
    r.q = q;
    r.lhs = sum_abs_moment(seq, q);
    const LevyVarianceMeasure h = accompanying_measure(seq);
    double budget = detail::rounding_budget(r.lhs, 64);
    if (h.empty()) {
        r.rhs = 0.0;
    } else {
        const bool contour = h.nonzero_location_count() > kMaxSeriesAtoms;
        // The contour tail shrinks only like T^{-q}; an absolute tolerance
        // scaled to the size of the moment keeps low q affordable.
        SeriesConfig used = cfg;
        if (contour) used.tol = std::max(cfg.tol, 1e-10 * std::max(r.lhs, std::pow(h.total_weight(), q / 2.0)));
        try {
            r.rhs = cp_abs_moment(CompoundLaw{0.0, DiscreteRV(), h}, q, used);
        } catch (const Error& e) {
            r.status = CheckStatus::skipped;
            r.note = e.what();
            return r;
        }
        // The contour engine certifies its quadrature to 1e-10 of the
        // integrand's L1 norm, which can exceed the value itself.
        budget += contour ? std::max(10.0 * used.tol, 1e-9 * r.rhs) : cfg.tol + detail::rounding_budget(r.rhs, 64);
        if (contour) r.note = "contour engine";
    }
    r.error_budget = budget;
    return detail::finish_report(r);
}

/// Deterministic random law with 2..max_support atoms in
/// [-value_range, value_range], centered to mean zero.
inline DiscreteRV random_zero_mean_rv(std::uint64_t seed, std::size_t max_support, double value_range) {
    if (max_support < 2) throw std::invalid_argument("random_zero_mean_rv: max_support must be >= 2");
    if (!(value_range > 0.0)) throw std::invalid_argument("random_zero_mean_rv: value_range must be positive");
    std::mt19937_64 rng(seed);
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const std::size_t k = 2 + static_cast<std::size_t>(rng() % (max_support - 1));
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < k; ++i)
        atoms.push_back({value_range * (2.0 * unit() - 1.0), 0.05 + unit()});
    DiscreteRV x = rv_center(DiscreteRV::from_weights(std::move(atoms)));
    // Centering can push an atom outside the range; shrink back.
    const double m = x.max_abs_value();
    if (m <= value_range) return x;
    std::vector<Atom> scaled(x.atoms().begin(), x.atoms().end());
    for (Atom& a : scaled) a.value *= value_range / m;
    return rv_center(DiscreteRV::from_weights(std::move(scaled)));
}

struct FuzzSpec {
    std::size_t max_members = 4;
    std::size_t max_support = 4;
    double value_range = 3.0;
    bool random_background = true;
};

struct FuzzCase {
    RVSequence seq;
    DiscreteRV background;
};

/// Case generator; every random draw is derived from `seed`.
inline FuzzCase random_fuzz_case(std::uint64_t seed, const FuzzSpec& spec) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 1 + static_cast<std::size_t>(rng() % spec.max_members);
    std::vector<DiscreteRV> members;
    for (std::size_t i = 0; i < n; ++i) members.push_back(random_zero_mean_rv(rng(), spec.max_support, spec.value_range));
    DiscreteRV x;
    if (spec.random_background && rng() % 2 == 0) x = random_zero_mean_rv(rng(), spec.max_support, spec.value_range);
    return {RVSequence(std::move(members)), std::move(x)};
}

/// Random law X + Y_H for engine comparisons: one or two Levy atoms with
/// |u| in [0.3, 3] and weights in [0.1, 2], an optional Gaussian part and
/// an optional zero-mean background.
inline CompoundLaw random_compound_law(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const std::size_t k = 1 + static_cast<std::size_t>(rng() % 2);
    std::vector<Atom> h;
    for (std::size_t i = 0; i < k; ++i) {
        const double mag = 0.3 + 2.7 * unit();
        h.push_back({rng() % 2 ? mag : -mag, 0.1 + 1.9 * unit()});
    }
    if (rng() % 3 == 0) h.push_back({0.0, 0.1 + 1.9 * unit()});
    DiscreteRV x;
    if (rng() % 2 == 0) x = random_zero_mean_rv(rng(), 3, 2.0);
    return {0.0, std::move(x), LevyVarianceMeasure(std::move(h))};
}

/// Random H with one to three atoms and a direction supported on the same
/// locations, so H + t Delta stays nonnegative for small |t| of either sign.
struct RandomPath {
    LevyVarianceMeasure base;
    SignedAtomMeasure direction;
    double t_max;
};

inline RandomPath random_two_sided_path(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const std::size_t k = 1 + static_cast<std::size_t>(rng() % kMaxSeriesAtoms);
    std::vector<Atom> h;
    std::vector<Atom> d;
    double t_max = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        const double mag = 0.5 + 1.5 * unit();
        const double u = (i == 0 && rng() % 4 == 0) ? 0.0 : (rng() % 2 ? mag : -mag);
        const double w = 0.2 + 1.3 * unit();
        const double dw = 2.0 * unit() - 1.0;
        h.push_back({u, w});
        d.push_back({u, dw});
        if (dw < 0.0) t_max = std::min(t_max, w / -dw);
    }
    if (!std::isfinite(t_max)) t_max = 1.0;
    return {LevyVarianceMeasure(std::move(h)), SignedAtomMeasure(std::move(d)), 0.5 * t_max};
}

/// Parameters (kappa, gamma) of the i.i.d. triangular array
/// W = gamma x with probability (kappa/n) g(x), else 0; Z = W - E W.
struct AccompanyingParams {
    double kappa;
    double gamma;
    std::size_t n;
};

namespace detail {

struct MomentAndGradient {
    double value;
    double d_kappa;
    double d_gamma;
};

/// n E|Z|^r and its partial derivatives in (kappa, gamma).
inline MomentAndGradient array_moment(const LevyVarianceMeasure& g, double n, double kappa, double gamma, double r) {
    double total_g = 0.0;
    double mean_g = 0.0;
    for (const Atom& a : g.atoms()) {
        total_g += a.weight;
        mean_g += a.value * a.weight;
    }
    const double m = gamma * kappa * mean_g / n;
    const double dm_dk = gamma * mean_g / n;
    const double dm_dg = kappa * mean_g / n;
    auto pw = [r](double y) { return y == 0.0 ? 0.0 : std::pow(std::abs(y), r); };
    auto dpw = [r](double y) { return y == 0.0 ? 0.0 : r * std::pow(std::abs(y), r - 1.0) * (y > 0.0 ? 1.0 : -1.0); };
    const double p0 = 1.0 - kappa * total_g / n;
    MomentAndGradient out{0.0, 0.0, 0.0};
    for (const Atom& a : g.atoms()) {
        const double px = kappa * a.weight / n;
        const double y = gamma * a.value - m;
        out.value += px * pw(y);
        out.d_kappa += (a.weight / n) * pw(y) - px * dpw(y) * dm_dk;
        out.d_gamma += px * dpw(y) * (a.value - dm_dg);
    }
    out.value += p0 * pw(m);
    out.d_kappa += -(total_g / n) * pw(m) + p0 * dpw(m) * dm_dk;
    out.d_gamma += p0 * dpw(m) * dm_dg;
    out.value *= n;
    out.d_kappa *= n;
    out.d_gamma *= n;
    return out;
}

} // namespace detail

namespace detail {

inline bool accompanying_residual_ok(const LevyVarianceMeasure& g, double n, double kappa, double gamma, double p,
                                     double A, double B, double tol) {
    const double b = array_moment(g, n, kappa, gamma, 2.0).value;
    const double a = array_moment(g, n, kappa, gamma, p).value;
    return std::abs(b - B) <= tol * B && std::abs(a - A) <= tol * A;
}

/// Z scales linearly in gamma, so the system reduces to
/// A / B^{p/2} = a(kappa) / b(kappa)^{p/2} with a, b the moments at gamma = 1.
/// The smallest root on (0, kappa_max] is bracketed on a log grid and bisected.
inline std::optional<AccompanyingParams> solve_accompanying_reduced(const LevyVarianceMeasure& g, std::size_t n,
                                                                    double p, double A, double B) {
    const double nd = static_cast<double>(n);
    const double kappa_max = nd / g.total_weight();
    const double target = std::log(A) - 0.5 * p * std::log(B);
    auto excess = [&](double kappa) {
        const double b = array_moment(g, nd, kappa, 1.0, 2.0).value;
        const double a = array_moment(g, nd, kappa, 1.0, p).value;
        return std::log(a) - 0.5 * p * std::log(b) - target;
    };
    constexpr int steps = 400;
    double lo = kappa_max * 1e-12;
    double f_lo = excess(lo);
    for (int i = 1; i <= steps; ++i) {
        const double hi = kappa_max * std::pow(1e-12, 1.0 - static_cast<double>(i) / steps);
        const double f_hi = excess(hi);
        if (std::isfinite(f_lo) && std::isfinite(f_hi) && (f_lo > 0.0) != (f_hi > 0.0)) {
            boost::uintmax_t iters = 200;
            const auto [a, b] = boost::math::tools::bisect(excess, lo, hi, boost::math::tools::eps_tolerance<double>(52),
                                                           iters);
            const double kappa = std::abs(excess(a)) <= std::abs(excess(b)) ? a : b;
            const double gamma = std::sqrt(B / array_moment(g, nd, kappa, 1.0, 2.0).value);
            return AccompanyingParams{kappa, gamma, n};
        }
        if (f_hi == 0.0) return AccompanyingParams{hi, std::sqrt(B / array_moment(g, nd, hi, 1.0, 2.0).value), n};
        lo = hi;
        f_lo = f_hi;
    }
    return std::nullopt;
}

} // namespace detail

/// Solves n E|Z|^2 = B and n E|Z|^p = A for (kappa, gamma) by Newton's
/// method from (1, 1), keeping (kappa/n) G(R) < 1. If Newton stalls, falls
/// back to the one-dimensional reduction in kappa.
inline AccompanyingParams solve_accompanying(const LevyVarianceMeasure& g, std::size_t n, double p, double A, double B) {
    const MomentConstraints mc(p, A, B);
    if (n == 0) throw std::invalid_argument("solve_accompanying: n must be positive");
    if (g.empty()) throw std::invalid_argument("solve_accompanying: G must be nonzero");
    const double nd = static_cast<double>(n);
    const double kappa_max = nd / g.total_weight();
    double kappa = 1.0;
    double gamma = 1.0;
    constexpr double target = 1e-13;
    constexpr double accept = 1e-11;
    bool converged = false;
    for (int iter = 0; iter < 200; ++iter) {
        const auto f2 = detail::array_moment(g, nd, kappa, gamma, 2.0);
        const auto fp = detail::array_moment(g, nd, kappa, gamma, p);
        const double r2 = f2.value - B;
        const double rp = fp.value - A;
        if (std::abs(r2) <= target * B && std::abs(rp) <= target * A) {
            converged = true;
            break;
        }
        const double det = f2.d_kappa * fp.d_gamma - f2.d_gamma * fp.d_kappa;
        if (!std::isfinite(det) || det == 0.0) break;
        const double dk = -(r2 * fp.d_gamma - f2.d_gamma * rp) / det;
        const double dg = -(f2.d_kappa * rp - r2 * fp.d_kappa) / det;
        double step = 1.0;
        while (kappa + step * dk <= 0.0 || kappa + step * dk >= kappa_max || gamma + step * dg <= 0.0) {
            step *= 0.5;
            if (step < 1e-12) break;
        }
        if (step < 1e-12) break;
        kappa += step * dk;
        gamma += step * dg;
        if (!std::isfinite(kappa) || !std::isfinite(gamma)) break;
    }
    if (!converged && !(kappa > 0.0 && kappa <= kappa_max && gamma > 0.0 &&
                        detail::accompanying_residual_ok(g, nd, kappa, gamma, p, A, B, accept))) {
        const auto reduced = detail::solve_accompanying_reduced(g, n, p, A, B);
        if (!reduced) throw InfeasibleMass("solve_accompanying: no (kappa, gamma) with (kappa/n) G(R) <= 1; n too small");
        kappa = reduced->kappa;
        gamma = reduced->gamma;
    }
    if (!detail::accompanying_residual_ok(g, nd, kappa, gamma, p, A, B, accept))
        throw NewtonDiverged("solve_accompanying: residual above 1e-11");
    if (kappa / nd * g.total_weight() > 1.0 + 1e-15)
        throw InfeasibleMass("solve_accompanying: (kappa/n) G(R) exceeds 1; n too small");
    return {kappa, gamma, n};
}

/// Law of a single Z = W - E W of the array.
inline DiscreteRV accompanying_member(const LevyVarianceMeasure& g, const AccompanyingParams& prm) {
    const double nd = static_cast<double>(prm.n);
    std::vector<Atom> atoms;
    double zero = 1.0;
    for (const Atom& a : g.atoms()) {
        const double px = prm.kappa * a.weight / nd;
        atoms.push_back({prm.gamma * a.value, px});
        zero -= px;
    }
    if (zero > 0.0) atoms.push_back({0.0, zero});
    return rv_center(DiscreteRV::from_weights(std::move(atoms)));
}

struct AccompanyingSequence {
    AccompanyingParams params;
    double moment;  // E|S_n|^p
    double bound;   // c^p E|Pi~_lambda|^p
    double gap;     // (bound - moment) / bound
};

/// E|S_n|^p for the array built on G = lambda delta_c, where
/// S_n = gamma c (K - kappa lambda), K ~ Binomial(n, kappa lambda / n).
inline AccompanyingSequence accompanying_sequence(double p, double A, double B, std::size_t n,
                                                  const SeriesConfig& cfg = {}) {
    const LambdaC lc = solve_lambda_c(p, A, B);
    const LevyVarianceMeasure g({{lc.c, lc.lambda}});
    const AccompanyingParams prm = solve_accompanying(g, n, p, A, B);
    if (n + 1 > cfg.max_terms) throw TailNotConverged("accompanying_sequence: n exceeds max_terms");
    const double nd = static_cast<double>(n);
    const double pi = prm.kappa * lc.lambda / nd;
    const double log_pi = std::log(pi);
    const double log_1mpi = std::log1p(-pi);
    const double scale = prm.gamma * lc.c;
    const double center = prm.kappa * lc.lambda;
    const double log_nfact = std::lgamma(nd + 1.0);
    double total = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double kd = static_cast<double>(k);
        const double d = std::abs(kd - center);
        if (d == 0.0) continue;
        const double lp = log_nfact - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) + kd * log_pi +
                          (nd - kd) * log_1mpi;
        total += std::exp(lp + p * std::log(scale * d));
    }
    double bound = 0.0;
    if (is_even_integer(p)) bound = even_p_bound(p, A, B).value;
    else bound = std::pow(lc.c, p) * poisson_abs_central_moment(lc.lambda, p, cfg);
    return {prm, total, bound, (bound - total) / bound};
}

inline double accompanying_sequence_moment(double p, double A, double B, std::size_t n, const SeriesConfig& cfg = {}) {
    return accompanying_sequence(p, A, B, n, cfg).moment;
}

} // namespace rosenthal
