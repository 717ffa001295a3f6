#pragma once

// Moments of x0 + X + Y_H, where X is a finitely supported law and Y_H is
// the infinitely divisible law with variance measure H, by two independent
// engines: nested Poisson series and the Fourier-Laplace contour integral.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include "core_measures.hpp"
#include "errors.hpp"
#include "poisson_moments.hpp"

namespace rosenthal {

using Complex = std::complex<double>;

/// x0 + X + Y_H with X and Y_H independent. A levy atom (0, w) is a
/// N(0, w) component; an atom (u, w) with u != 0 is u * (Pi_{w/u^2} - w/u^2).
struct CompoundLaw {
    double shift = 0.0;
    DiscreteRV background{};
    LevyVarianceMeasure levy{};

    /// Law of -(x0 + X + Y_H).
    CompoundLaw reflected() const {
        std::vector<Atom> xs(background.atoms().begin(), background.atoms().end());
        for (Atom& a : xs) a.value = -a.value;
        return {-shift, DiscreteRV(std::move(xs)), levy.reflected()};
    }

    /// Law of kappa * (x0 + X + Y_H).
    CompoundLaw scaled(double kappa) const {
        std::vector<Atom> xs(background.atoms().begin(), background.atoms().end());
        for (Atom& a : xs) a.value *= kappa;
        return {kappa * shift, DiscreteRV(std::move(xs)), levy.scaled(kappa)};
    }

    bool is_symmetric() const {
        if (shift != 0.0 || !background.is_symmetric()) return false;
        return levy == levy.reflected();
    }
};

inline constexpr std::size_t kMaxSeriesAtoms = 3;

/// (e^u - 1 - u) / u^2, the normalized first-order Taylor remainder of exp
/// at 0; equals 1/2 at u = 0.
inline Complex r1_exp(Complex u) {
    if (std::abs(u) < 1.0) {
        // sum_{j>=0} u^j / (j+2)!
        Complex term = 0.5;
        Complex sum = term;
        for (int j = 1; j < 40; ++j) {
            term *= u / static_cast<double>(j + 2);
            sum += term;
            if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
        }
        return sum;
    }
    return (std::exp(u) - 1.0 - u) / (u * u);
}

/// E exp{z (x0 + X + Y_H)} for Re z > 0.
inline Complex cp_mgf(const CompoundLaw& law, Complex z) {
    Complex mx = 0.0;
    for (const Atom& a : law.background.atoms()) mx += a.weight * std::exp(z * a.value);
    Complex exponent = z * law.shift;
    for (const Atom& h : law.levy.atoms()) exponent += z * z * h.weight * r1_exp(z * h.value);
    return mx * std::exp(exponent);
}

namespace detail {

inline void split_levy(const LevyVarianceMeasure& levy, std::vector<PoissonComponent>& comps,
                       double& gaussian_sd) {
    gaussian_sd = 0.0;
    for (const Atom& h : levy.atoms()) {
        if (h.value == 0.0) gaussian_sd = std::sqrt(h.weight);
        else comps.push_back({h.value, h.weight / (h.value * h.value)});
    }
}

inline std::vector<Atom> shifted_background(const CompoundLaw& law) {
    std::vector<Atom> base(law.background.atoms().begin(), law.background.atoms().end());
    for (Atom& a : base) a.value += law.shift;
    return base;
}

} // namespace detail

/// Series engine for E(x0 + X + Y_H)^q on the requested side.
inline double cp_part_moment_series(const CompoundLaw& law, double q, Side side,
                                    const SeriesConfig& cfg = {}) {
    if (!(q > 0.0)) throw std::invalid_argument("cp moment: q must be positive");
    if (law.levy.nonzero_location_count() > kMaxSeriesAtoms)
        throw TooManyAtoms("series engine supports at most 3 nonzero Levy atoms");
    std::vector<PoissonComponent> comps;
    double sd = 0.0;
    detail::split_levy(law.levy, comps, sd);
    const auto base = detail::shifted_background(law);
    return detail::lattice_moment(base, comps, sd, q, side, cfg);
}

inline double cp_abs_moment_series(const CompoundLaw& law, double q, const SeriesConfig& cfg = {}) {
    return cp_part_moment_series(law, q, Side::absolute, cfg);
}

/// Abscissa 1 / (1 + max |u|) over the nonzero Levy locations.
inline double default_contour_abscissa(const CompoundLaw& law) {
    return 1.0 / (1.0 + law.levy.max_abs_location());
}

/// Contour engine: Gamma(q+1)/(2 pi) * integral over tau of
/// M(sigma + i tau) / (sigma + i tau)^{q+1}, M the moment generating
/// function, gives E(x0 + X + Y_H)_+^q. The negative side integrates the
/// reflected law.
inline double cp_part_moment_contour(const CompoundLaw& law, double q, Side side,
                                     std::optional<double> sigma_opt = std::nullopt,
                                     const SeriesConfig& cfg = {}) {
    cfg.validate();
    if (!(q > 2.0)) throw std::invalid_argument("contour engine requires q > 2");
    if (side == Side::absolute)
        return cp_part_moment_contour(law, q, Side::positive, sigma_opt, cfg) +
               cp_part_moment_contour(law, q, Side::negative, sigma_opt, cfg);
    if (side == Side::negative)
        return cp_part_moment_contour(law.reflected(), q, Side::positive, sigma_opt, cfg);

    const double sigma = sigma_opt.value_or(default_contour_abscissa(law));
    if (!(sigma > 0.0)) throw std::invalid_argument("contour abscissa must be positive");

    const double log_gamma = std::lgamma(q + 1.0);
    const double m_sigma = cp_mgf(law, Complex(sigma, 0.0)).real();

    // Envelope |M(sigma + i tau)| <= M(sigma) bounds the tail beyond T by
    // Gamma(q+1)/pi * M(sigma) * T^{-q} / q.
    const double tail_budget = 0.25 * cfg.tol;
    const double log_t = (log_gamma + std::log(m_sigma) - std::log(std::numbers::pi * q * tail_budget)) / q;
    const double t_max = std::max(std::exp(log_t), 10.0 * sigma);

    auto integrand = [&](double tau) {
        auto f = [&](double t) {
            const Complex z(sigma, t);
            // principal branch; arg z stays inside (-pi/2, pi/2)
            const Complex log_z(std::log(std::abs(z)), std::arg(z));
            return cp_mgf(law, z) * std::exp(-(q + 1.0) * log_z);
        };
        return f(tau) + f(-tau);
    };

    double freq = std::max(1.0, law.levy.max_abs_location());
    for (const Atom& a : law.background.atoms()) freq = std::max(freq, std::abs(a.value + law.shift));
    const double panel = std::numbers::pi / freq;

    // Each panel's quadrature error is held to a relative tolerance of its
    // own L1 norm; the sum of L1 norms is tracked to certify the total.
    constexpr double panel_rel = 1e-10;
    Complex total = 0.0;
    double err_total = 0.0;
    double l1_total = 0.0;
    double a = 0.0;
    while (a < t_max) {
        const double width = std::min({panel, std::max(sigma, 0.5 * a), t_max - a});
        const double b = a + std::max(width, 1e-300);
        double err = 0.0;
        double l1 = 0.0;
        const Complex piece = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            integrand, a, b, 12, panel_rel, &err, &l1);
        total += piece;
        err_total += err;
        l1_total += l1;
        a = b;
    }
    const double scale = std::exp(log_gamma) / (2.0 * std::numbers::pi);
    const double value = scale * total.real();
    const double residual = scale * std::abs(total.imag());
    const double quad_err = scale * err_total;
    const double allowed = std::max(cfg.tol, 1e-12 * std::abs(value));
    if (quad_err > std::max(allowed, 1e-10 * scale * l1_total))
        throw QuadratureNotConverged("contour quadrature error " + std::to_string(quad_err));
    if (residual > allowed)
        throw ImaginaryResidualTooLarge("contour imaginary residual " + std::to_string(residual));
    return std::max(value, 0.0);
}

struct CrossCheckedMoment {
    double value;
    std::optional<double> contour_value;
    double discrepancy = 0.0;  // relative
};

enum class CrossCheck { off, contour };

/// Dispatcher: series engine when the law fits it, otherwise the contour
/// engine (q > 2). With CrossCheck::contour both engines run for q > 2.
inline CrossCheckedMoment cp_abs_moment_checked(const CompoundLaw& law, double q, const SeriesConfig& cfg,
                                                CrossCheck check) {
    if (law.levy.nonzero_location_count() > kMaxSeriesAtoms) {
        if (!(q > 2.0)) throw TooManyAtoms("more than 3 Levy atoms and q <= 2");
        const double v = cp_part_moment_contour(law, q, Side::absolute, std::nullopt, cfg);
        return {v, v, 0.0};
    }
    CrossCheckedMoment r{cp_abs_moment_series(law, q, cfg), std::nullopt, 0.0};
    if (check == CrossCheck::contour && q > 2.0) {
        const double c = cp_part_moment_contour(law, q, Side::absolute, std::nullopt, cfg);
        r.contour_value = c;
        r.discrepancy = std::abs(c - r.value) / std::max(std::abs(r.value), 1e-300);
    }
    return r;
}

inline double cp_abs_moment(const CompoundLaw& law, double q, const SeriesConfig& cfg = {}) {
    return cp_abs_moment_checked(law, q, cfg, CrossCheck::off).value;
}

inline double cp_part_moment(const CompoundLaw& law, double q, Side side, const SeriesConfig& cfg = {}) {
    if (law.levy.nonzero_location_count() > kMaxSeriesAtoms)
        return cp_part_moment_contour(law, q, side, std::nullopt, cfg);
    return cp_part_moment_series(law, q, side, cfg);
}

} // namespace rosenthal
