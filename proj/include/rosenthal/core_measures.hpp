#pragma once

// Value types for finitely supported laws and atomic measures.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rosenthal {

inline constexpr double kAtomMergeTol = 1e-12;
inline constexpr double kProbSumTol = 1e-12;

struct Atom {
    double value;
    double weight;

    friend bool operator==(const Atom&, const Atom&) = default;
};

namespace detail {

/// Sorts by value and folds atoms whose values lie within `tol` of the
/// first atom of the current run. Weights are summed.
inline std::vector<Atom> merge_sorted(std::vector<Atom> atoms, double tol) {
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.value < b.value; });
    std::vector<Atom> out;
    out.reserve(atoms.size());
    for (const Atom& a : atoms) {
        if (!out.empty() && a.value - out.back().value <= tol)
            out.back().weight += a.weight;
        else
            out.push_back(a);
    }
    return out;
}

inline void require_finite(const Atom& a, const char* what) {
    if (!std::isfinite(a.value) || !std::isfinite(a.weight))
        throw std::invalid_argument(std::string(what) + ": non-finite atom");
}

} // namespace detail

/// Finitely supported probability distribution on the real line.
/// Atoms are kept sorted by value, distinct and with strictly positive
/// probabilities summing to one.
class DiscreteRV {
public:
    /// Point mass at zero.
    DiscreteRV() : atoms_{{0.0, 1.0}} {}

    explicit DiscreteRV(std::vector<Atom> atoms) {
        for (const Atom& a : atoms) {
            detail::require_finite(a, "DiscreteRV");
            if (a.weight <= 0.0)
                throw std::invalid_argument("DiscreteRV: probabilities must be positive");
        }
        if (atoms.empty())
            throw std::invalid_argument("DiscreteRV: empty support");
        atoms_ = detail::merge_sorted(std::move(atoms), kAtomMergeTol);
        double total = 0.0;
        for (const Atom& a : atoms_) total += a.weight;
        if (std::abs(total - 1.0) > kProbSumTol)
            throw std::invalid_argument("DiscreteRV: probabilities do not sum to 1");
    }

    /// Builds a law from nonnegative weights, rescaling them to total one.
    /// Zero weights are dropped.
    static DiscreteRV from_weights(std::vector<Atom> atoms) {
        double total = 0.0;
        std::vector<Atom> kept;
        for (const Atom& a : atoms) {
            detail::require_finite(a, "DiscreteRV");
            if (a.weight < 0.0)
                throw std::invalid_argument("DiscreteRV: negative weight");
            if (a.weight > 0.0) {
                kept.push_back(a);
                total += a.weight;
            }
        }
        if (kept.empty())
            throw std::invalid_argument("DiscreteRV: empty support");
        for (Atom& a : kept) a.weight /= total;
        return renormalized(detail::merge_sorted(std::move(kept), kAtomMergeTol));
    }

    static DiscreteRV point_mass(double x) { return DiscreteRV({{x, 1.0}}); }

    static DiscreteRV rademacher() { return DiscreteRV({{-1.0, 0.5}, {1.0, 0.5}}); }

    std::span<const Atom> atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }

    double min_value() const { return atoms_.front().value; }
    double max_value() const { return atoms_.back().value; }
    double max_abs_value() const {
        return std::max(std::abs(atoms_.front().value), std::abs(atoms_.back().value));
    }

    bool is_point_mass_at_zero() const {
        return atoms_.size() == 1 && atoms_.front().value == 0.0;
    }

    /// True when the atom set is invariant under x -> -x, within `tol` on
    /// values and probabilities.
    bool is_symmetric(double tol = 1e-12) const {
        const std::size_t n = atoms_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Atom& lo = atoms_[i];
            const Atom& hi = atoms_[n - 1 - i];
            if (std::abs(lo.value + hi.value) > tol) return false;
            if (std::abs(lo.weight - hi.weight) > tol) return false;
        }
        return true;
    }

    friend bool operator==(const DiscreteRV&, const DiscreteRV&) = default;

private:
    struct Trusted {};
    DiscreteRV(Trusted, std::vector<Atom> atoms) : atoms_(std::move(atoms)) {}

    // Rescale only when the drift exceeds the tolerance so that dyadic
    // inputs stay exact.
    static DiscreteRV renormalized(std::vector<Atom> atoms) {
        double total = 0.0;
        for (const Atom& a : atoms) total += a.weight;
        if (std::abs(total - 1.0) > kProbSumTol)
            for (Atom& a : atoms) a.weight /= total;
        return DiscreteRV(Trusted{}, std::move(atoms));
    }

    friend DiscreteRV rv_convolve(const DiscreteRV& x, const DiscreteRV& y);
    friend DiscreteRV rv_center(const DiscreteRV& x);

    std::vector<Atom> atoms_;
};

inline double rv_mean(const DiscreteRV& x) {
    double m = 0.0;
    for (const Atom& a : x.atoms()) m += a.value * a.weight;
    return m;
}

inline double rv_abs_moment(const DiscreteRV& x, double q) {
    if (!(q > 0.0)) throw std::invalid_argument("rv_abs_moment: q must be positive");
    double m = 0.0;
    for (const Atom& a : x.atoms()) m += std::pow(std::abs(a.value), q) * a.weight;
    return m;
}

inline double rv_variance(const DiscreteRV& x) {
    const double mu = rv_mean(x);
    double v = 0.0;
    for (const Atom& a : x.atoms()) v += (a.value - mu) * (a.value - mu) * a.weight;
    return v;
}

/// Law of X + Y for independent X and Y.
inline DiscreteRV rv_convolve(const DiscreteRV& x, const DiscreteRV& y) {
    std::vector<Atom> atoms;
    atoms.reserve(x.size() * y.size());
    for (const Atom& a : x.atoms())
        for (const Atom& b : y.atoms())
            atoms.push_back({a.value + b.value, a.weight * b.weight});
    return DiscreteRV::renormalized(detail::merge_sorted(std::move(atoms), kAtomMergeTol));
}

inline DiscreteRV rv_center(const DiscreteRV& x) {
    const double mu = rv_mean(x);
    std::vector<Atom> atoms(x.atoms().begin(), x.atoms().end());
    for (Atom& a : atoms) a.value -= mu;
    // Shifting can push neighbours within the merge tolerance.
    return DiscreteRV::renormalized(detail::merge_sorted(std::move(atoms), kAtomMergeTol));
}

/// Finite nonnegative atomic measure H. An atom (u, w) means H({u}) = w,
/// in units of variance; the atom at u = 0 is a Gaussian component.
class LevyVarianceMeasure {
public:
    LevyVarianceMeasure() = default;

    explicit LevyVarianceMeasure(std::vector<Atom> atoms) {
        for (const Atom& a : atoms) {
            detail::require_finite(a, "LevyVarianceMeasure");
            if (a.weight < 0.0)
                throw std::invalid_argument("LevyVarianceMeasure: negative weight");
        }
        auto merged = detail::merge_sorted(std::move(atoms), 0.0);
        std::erase_if(merged, [](const Atom& a) { return a.weight == 0.0; });
        atoms_ = std::move(merged);
    }

    std::span<const Atom> atoms() const { return atoms_; }
    bool empty() const { return atoms_.empty(); }

    double total_weight() const {
        double t = 0.0;
        for (const Atom& a : atoms_) t += a.weight;
        return t;
    }

    /// Integral of |x|^{p-2} against H.
    double p_moment(double p) const {
        double t = 0.0;
        for (const Atom& a : atoms_)
            if (a.value != 0.0) t += std::pow(std::abs(a.value), p - 2.0) * a.weight;
            else if (p == 2.0) t += a.weight;
        return t;
    }

    double gaussian_variance() const {
        for (const Atom& a : atoms_)
            if (a.value == 0.0) return a.weight;
        return 0.0;
    }

    std::size_t nonzero_location_count() const {
        return static_cast<std::size_t>(
            std::count_if(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.value != 0.0; }));
    }

    double max_abs_location() const {
        double m = 0.0;
        for (const Atom& a : atoms_) m = std::max(m, std::abs(a.value));
        return m;
    }

    /// H(-du).
    LevyVarianceMeasure reflected() const {
        std::vector<Atom> r;
        r.reserve(atoms_.size());
        for (const Atom& a : atoms_) r.push_back({-a.value, a.weight});
        return LevyVarianceMeasure(std::move(r));
    }

    /// Locations scaled by kappa, weights by kappa^2.
    LevyVarianceMeasure scaled(double kappa) const {
        std::vector<Atom> r;
        r.reserve(atoms_.size());
        for (const Atom& a : atoms_) r.push_back({kappa * a.value, kappa * kappa * a.weight});
        return LevyVarianceMeasure(std::move(r));
    }

    friend bool operator==(const LevyVarianceMeasure&, const LevyVarianceMeasure&) = default;

private:
    std::vector<Atom> atoms_;
};

/// Finite signed atomic measure; atoms with equal locations are summed and
/// exact cancellations removed.
class SignedAtomMeasure {
public:
    SignedAtomMeasure() = default;

    explicit SignedAtomMeasure(std::vector<Atom> atoms) {
        for (const Atom& a : atoms) detail::require_finite(a, "SignedAtomMeasure");
        auto merged = detail::merge_sorted(std::move(atoms), 0.0);
        std::erase_if(merged, [](const Atom& a) { return a.weight == 0.0; });
        atoms_ = std::move(merged);
    }

    std::span<const Atom> atoms() const { return atoms_; }
    bool empty() const { return atoms_.empty(); }

    double total_variation() const {
        double t = 0.0;
        for (const Atom& a : atoms_) t += std::abs(a.weight);
        return t;
    }

    SignedAtomMeasure scaled_weights(double beta) const {
        std::vector<Atom> r(atoms_.begin(), atoms_.end());
        for (Atom& a : r) a.weight *= beta;
        return SignedAtomMeasure(std::move(r));
    }

    friend bool operator==(const SignedAtomMeasure&, const SignedAtomMeasure&) = default;

private:
    std::vector<Atom> atoms_;
};

/// H + t * Delta, or nullopt when some weight would be negative beyond
/// rounding. Weights within 1e-15 (relative to the larger operand) of zero
/// are clamped.
inline std::optional<LevyVarianceMeasure> perturbed(const LevyVarianceMeasure& h,
                                                    const SignedAtomMeasure& delta, double t) {
    std::vector<Atom> atoms(h.atoms().begin(), h.atoms().end());
    for (const Atom& d : delta.atoms()) {
        auto it = std::find_if(atoms.begin(), atoms.end(),
                               [&](const Atom& a) { return a.value == d.value; });
        if (it == atoms.end()) atoms.push_back({d.value, t * d.weight});
        else {
            const double w = it->weight + t * d.weight;
            const double scale = std::max(std::abs(it->weight), std::abs(t * d.weight));
            it->weight = (std::abs(w) <= 1e-15 * scale) ? 0.0 : w;
        }
    }
    for (Atom& a : atoms) {
        if (a.weight < 0.0) {
            if (a.weight > -1e-15) a.weight = 0.0;
            else return std::nullopt;
        }
    }
    return LevyVarianceMeasure(std::move(atoms));
}

/// The constraint triple (p, A, B) of the class X_{p;A,B}.
struct MomentConstraints {
    double p;
    double A;
    double B;

    MomentConstraints(double p_, double a_, double b_) : p(p_), A(a_), B(b_) {
        if (!(p > 2.0)) throw std::invalid_argument("MomentConstraints: p must exceed 2");
        if (!(A > 0.0) || !(B > 0.0))
            throw std::invalid_argument("MomentConstraints: A and B must be positive");
    }
};

enum class ClassMode { exact, dominated };

/// Membership of H in H_{p;A,B} (exact) or H_{p;<=A,<=B} (dominated),
/// optionally with supp H within [-M, M].
inline bool measure_in_class(const LevyVarianceMeasure& h, const MomentConstraints& c,
                             ClassMode mode, std::optional<double> support_bound = std::nullopt) {
    constexpr double rel = 1e-9;
    const double b = h.total_weight();
    const double a = h.p_moment(c.p);
    bool ok = false;
    if (mode == ClassMode::exact)
        ok = std::abs(b - c.B) <= rel * c.B && std::abs(a - c.A) <= rel * c.A;
    else
        ok = b <= c.B * (1.0 + rel) && a <= c.A * (1.0 + rel);
    if (ok && support_bound) ok = h.max_abs_location() <= *support_bound;
    return ok;
}

} // namespace rosenthal
