#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rosenthal/extremal_bounds.hpp"
#include "rosenthal/verifier.hpp"

using namespace rosenthal;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

const double kEZ25 = std::pow(2.0, 1.25) * std::tgamma(1.75) / std::sqrt(std::numbers::pi);

} // namespace

TEST(SolveLambdaC, Examples) {
    auto a = solve_lambda_c(5, 1, 1);
    EXPECT_DOUBLE_EQ(a.lambda, 1.0);
    EXPECT_DOUBLE_EQ(a.c, 1.0);
    auto b = solve_lambda_c(4, 2, 1);
    EXPECT_NEAR(b.lambda, 0.5, 1e-15);
    EXPECT_NEAR(b.c, std::sqrt(2.0), 1e-15);
    auto c = solve_lambda_c(6, 1, 4);
    EXPECT_NEAR(c.lambda, 8.0, 1e-12);
    EXPECT_NEAR(c.c, std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(c.c * c.c * c.lambda, 4.0, 1e-12);
    EXPECT_NEAR(std::pow(c.c, 6) * c.lambda, 1.0, 1e-12);
}

// Property: back-substitution residuals.
TEST(SolveLambdaCProperty, BackSubstitution) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> pp(2.1, 10.0), lg(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const double p = pp(rng), A = std::exp(lg(rng)), B = std::exp(lg(rng));
        const auto lc = solve_lambda_c(p, A, B);
        EXPECT_LT(rel(lc.c * lc.c * lc.lambda, B), 1e-10);
        EXPECT_LT(rel(std::pow(lc.c, p) * lc.lambda, A), 1e-10);
    }
}

TEST(ExactBound, CentredPoissonAtP5) {
    const auto r = exact_bound(5, 5, 1, 1, DiscreteRV());
    EXPECT_LT(rel(r.value, oracle::centered_poisson_abs_moment(1.0, 5.0)), 1e-12);
    EXPECT_EQ(r.regime, Regime::p_ge_5);
    EXPECT_EQ(r.achieved_sign, AchievedSign::both);
    ASSERT_EQ(r.certificate.size(), 1u);
    EXPECT_DOUBLE_EQ(r.certificate[0].lambda, 1.0);
    EXPECT_GT(r.error_budget, 0.0);
}

TEST(ExactBound, GaussianRegime) {
    const auto r = exact_bound(2.5, 2.5, 1, 1, DiscreteRV());
    EXPECT_LT(rel(r.value, 1.0 + kEZ25), 1e-12);
    EXPECT_EQ(r.regime, Regime::p_in_2_3);
    // E X = 0 is not required here.
    const DiscreteRV x({{0.5, 0.5}, {1.5, 0.5}});
    const auto s = exact_bound(2.5, 2.5, 1, 2, x);
    const double expected = 1.0 + 0.5 * oracle::gaussian_abs_moment(0.5, std::sqrt(2.0), 2.5) +
                            0.5 * oracle::gaussian_abs_moment(1.5, std::sqrt(2.0), 2.5);
    EXPECT_LT(rel(s.value, expected), 1e-9);
}

TEST(ExactBound, AsymmetricBackgroundPicksSign) {
    const DiscreteRV x({{-2.0, 0.2}, {0.5, 0.8}});
    const auto r = exact_bound(5, 5, 1, 1, x);
    const double plus = oracle::nested_moment(0.0, {{-2.0, 0.2}, {0.5, 0.8}}, {{1.0, 1.0}}, 5.0, 80);
    const double minus = oracle::nested_moment(0.0, {{-2.0, 0.2}, {0.5, 0.8}}, {{-1.0, 1.0}}, 5.0, 80);
    EXPECT_LT(rel(r.value, std::max(plus, minus)), 1e-10);
    EXPECT_EQ(r.achieved_sign, plus >= minus ? AchievedSign::plus : AchievedSign::minus);
}

TEST(ExactBound, OpenAndInvalidRegimes) {
    EXPECT_THROW(exact_bound(4, 4, 1, 1, DiscreteRV()), UnsupportedExponents);
    EXPECT_THROW(exact_bound(3.5, 3.5, 1, 1, DiscreteRV()), UnsupportedExponents);
    EXPECT_THROW(exact_bound(6, 4.5, 1, 1, DiscreteRV()), UnsupportedExponents);
    EXPECT_THROW(exact_bound(5, 6, 1, 1, DiscreteRV()), UnsupportedExponents);
    EXPECT_THROW(exact_bound(2.5, 3, 1, 1, DiscreteRV()), UnsupportedExponents);
    EXPECT_THROW(exact_bound(5, 5, 1, 1, DiscreteRV::point_mass(1.0)), NotZeroMean);
    EXPECT_THROW(exact_bound(5, 5, 0, 1, DiscreteRV()), std::invalid_argument);
    EXPECT_THROW(exact_bound(2, 2, 1, 1, DiscreteRV()), std::invalid_argument);
}

TEST(EvenPBound, Examples) {
    EXPECT_DOUBLE_EQ(even_p_bound(4, 1, 1).value, 4.0);
    EXPECT_DOUBLE_EQ(even_p_bound(6, 1, 1).value, 41.0);
    EXPECT_NEAR(even_p_bound(4, 16, 4).value, 64.0, 1e-12);
    EXPECT_THROW(even_p_bound(5, 1, 1), UnsupportedExponents);
    EXPECT_THROW(even_p_bound(2, 1, 1), UnsupportedExponents);
}

TEST(EvenPBound, AgainstDirectSum) {
    for (double p : {4.0, 6.0, 8.0})
        for (auto [A, B] : {std::pair{1.0, 1.0}, std::pair{0.3, 2.0}, std::pair{5.0, 0.7}}) {
            const auto lc = solve_lambda_c(p, A, B);
            const double ref = std::pow(lc.c, p) * oracle::centered_poisson_moment(lc.lambda, static_cast<int>(p), 400);
            EXPECT_LT(rel(even_p_bound(p, A, B).value, ref), 1e-10);
        }
}

TEST(SymmetricBound, AgainstDoubleSum) {
    const auto r = symmetric_bound(5, 5, 1, 1, DiscreteRV());
    const double ref = oracle::nested_moment(0.0, {{0.0, 1.0}}, {{1.0, 0.5}, {-1.0, 0.5}}, 5.0, 60);
    EXPECT_LT(rel(r.value, ref), 1e-11);
    EXPECT_EQ(r.regime, Regime::symmetric);
}

TEST(SymmetricBound, SecondMomentSanity) {
    const auto lc = solve_lambda_c(5, 3, 2);
    EXPECT_NEAR(skellam_abs_moment(lc.lambda / 2, lc.lambda / 2, lc.c, 2.0), 2.0, 1e-11);
}

// Property: the symmetric class is a subclass.
TEST(SymmetricBoundProperty, BelowExactBound) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> lg(-1.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        const double A = std::exp(lg(rng)), B = std::exp(lg(rng));
        const DiscreteRV x = random_zero_mean_rv(rng(), 3, 1.0);
        for (auto [p, q] : {std::pair{5.0, 5.0}, std::pair{6.0, 5.5}})
            EXPECT_LE(symmetric_bound(p, q, A, B, x).value, exact_bound(p, q, A, B, x).value * (1 + 1e-12));
    }
}

TEST(CombinedBound, VanishingSecondBlock) {
    const double eps = 1e-9;
    const double sym = symmetric_bound(5, 5, 1, 1, DiscreteRV()).value;
    const double comb = combined_bound(5, 5, 1, 1, eps, eps, DiscreteRV()).value;
    EXPECT_LT(rel(comb, sym), 1e-7);
}

TEST(CombinedBound, SymmetricBackgroundBothSigns) {
    const auto r = combined_bound(5, 5, 1, 1, 1, 1, DiscreteRV::rademacher());
    EXPECT_EQ(r.achieved_sign, AchievedSign::both);
    const double plus = oracle::nested_moment(0.0, {{-1.0, 0.5}, {1.0, 0.5}}, {{1, 0.5}, {-1, 0.5}, {1, 1}}, 5.0, 40);
    const double minus = oracle::nested_moment(0.0, {{-1.0, 0.5}, {1.0, 0.5}}, {{1, 0.5}, {-1, 0.5}, {-1, 1}}, 5.0, 40);
    EXPECT_LT(rel(plus, minus), 1e-10);
    EXPECT_LT(rel(r.value, plus), 1e-10);
}

TEST(CombinedBound, AgainstTripleSum) {
    const auto r = combined_bound(5, 5, 1, 1, 1, 1, DiscreteRV());
    const double ref = oracle::nested_moment(0.0, {{0.0, 1.0}}, {{1, 0.5}, {-1, 0.5}, {1, 1}}, 5.0, 60);
    EXPECT_LT(rel(r.value, ref), 1e-11);
    EXPECT_EQ(r.certificate.size(), 2u);
}

TEST(BestConstant, Examples) {
    EXPECT_DOUBLE_EQ(best_constant(4, 1), 4.0);
    EXPECT_DOUBLE_EQ(classical_rosenthal_constant(4), 1024.0);
    EXPECT_NEAR(classical_rosenthal_constant(6), 884736.0, 1e-6);
    EXPECT_LT(rel(best_constant(5, 1), oracle::centered_poisson_abs_moment(1.0, 5.0)), 1e-12);
    EXPECT_LT(rel(classical_rosenthal_constant(5), std::pow(2.5, 2.5) * std::pow(2.0, 11.25)), 1e-14);
    EXPECT_THROW(best_constant(3.5, 1), UnsupportedExponents);
}

// Property: E_{p;A,B} = B^{p/2} C_{p; B^{p/2}/A}.
TEST(BestConstantProperty, Duality) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lg(-1.5, 1.5);
    for (double p : {2.5, 4.0, 5.0, 6.0, 7.5}) {
        for (int i = 0; i < 5; ++i) {
            const double A = std::exp(lg(rng)), B = std::exp(lg(rng));
            const double e = rosenthal_bound(p, p, A, B, DiscreteRV()).value;
            const double d = std::pow(B, p / 2) * best_constant(p, std::pow(B, p / 2) / A);
            EXPECT_LT(rel(e, d), 1e-9) << p;
        }
    }
}

// Property: E_{p; k^p A, k^2 B} = k^p E_{p;A,B}.
TEST(ExactBoundProperty, Homogeneity) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> lg(-1.0, 1.0);
    for (double p : {2.5, 3.0, 4.0, 5.0, 5.5, 6.0}) {
        for (int i = 0; i < 10; ++i) {
            const double A = std::exp(lg(rng)), B = std::exp(lg(rng));
            const double base = rosenthal_bound(p, p, A, B, DiscreteRV()).value;
            for (double k : {0.5, 2.0, 3.0}) {
                const double scaled = rosenthal_bound(p, p, std::pow(k, p) * A, k * k * B, DiscreteRV()).value;
                EXPECT_LT(rel(scaled, std::pow(k, p) * base), 1e-9) << p << " " << k;
            }
        }
    }
}

// Property: nondecreasing in A and in B.
TEST(ExactBoundProperty, Monotonicity) {
    for (double p : {2.5, 5.0, 6.0}) {
        double prev = 0.0;
        for (int i = 0; i < 10; ++i) {
            const double v = rosenthal_bound(p, p, 0.2 + 0.3 * i, 1.0, DiscreteRV()).value;
            EXPECT_GE(v, prev - 1e-10);
            prev = v;
        }
        prev = 0.0;
        for (int i = 0; i < 10; ++i) {
            const double v = rosenthal_bound(p, p, 1.0, 0.2 + 0.3 * i, DiscreteRV()).value;
            EXPECT_GE(v, prev - 1e-10);
            prev = v;
        }
    }
}

// Property: at p = 4 the Poisson and Gaussian forms coincide.
TEST(ExactBoundProperty, FourthMomentCoincidence) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> lg(-1.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        const double A = std::exp(lg(rng)), B = std::exp(lg(rng));
        const DiscreteRV x = random_zero_mean_rv(rng(), 4, 2.0);
        const auto lc = solve_lambda_c(4, A, B);
        const double w = lc.c * lc.c * lc.lambda;
        double gauss = A;
        for (const Atom& a : x.atoms()) gauss += a.weight * oracle::gaussian_abs_moment(a.value, std::sqrt(B), 4.0);
        for (double sign : {1.0, -1.0}) {
            const double v = cp_abs_moment(CompoundLaw{0.0, x, LevyVarianceMeasure({{sign * lc.c, w}})}, 4.0);
            EXPECT_LT(rel(v, gauss), 1e-9);
        }
    }
}

TEST(RosenthalBound, Dispatch) {
    EXPECT_EQ(rosenthal_bound(4, 4, 1, 1, DiscreteRV()).regime, Regime::even_p_closed_form);
    EXPECT_EQ(rosenthal_bound(6, 6, 1, 1, DiscreteRV()).regime, Regime::even_p_closed_form);
    EXPECT_EQ(rosenthal_bound(6, 5.5, 1, 1, DiscreteRV()).regime, Regime::p_ge_5);
    EXPECT_EQ(rosenthal_bound(6, 6, 1, 1, DiscreteRV::rademacher()).regime, Regime::p_ge_5);
    // The closed form and the series agree at p = 6.
    EXPECT_LT(rel(rosenthal_bound(6, 6, 2, 3, DiscreteRV()).value, exact_bound(6, 6, 2, 3, DiscreteRV()).value), 1e-10);
}

TEST(QPointFromC, Examples) {
    const auto pt = q_point_from_c(5, 1, 1, 0.5, 2.0);
    ASSERT_TRUE(pt);
    EXPECT_NEAR(pt->lambda1, 32.0 / 9.0, 1e-12);
    EXPECT_NEAR(pt->lambda2, 1.0 / 36.0, 1e-12);
    EXPECT_FALSE(q_point_from_c(5, 1, 1, 2.0, 3.0));
    const auto lc = solve_lambda_c(5, 1, 1);
    const auto axis = q_point_from_c(5, 1, 1, lc.c, 1e3);
    ASSERT_TRUE(axis);
    EXPECT_TRUE(axis->on_axis());
    EXPECT_NEAR(axis->lambda1, lc.lambda, 1e-12);
    EXPECT_THROW(q_point_from_c(5, 1, 1, 1.5, -1.5), SingularSystem);
    EXPECT_THROW(q_point_from_c(5, 1, 1, 0.0, 2.0), std::invalid_argument);
}

// Property: every feasible point satisfies the two constraints.
TEST(QPointFromCProperty, Membership) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> lg(-2.0, 2.0);
    int feasible = 0;
    for (int i = 0; i < 200; ++i) {
        const double p = 5.5, A = 2.0, B = 1.5;
        const double c1 = std::exp(lg(rng)) * (rng() % 2 ? 1 : -1);
        const double c2 = std::exp(lg(rng)) * (rng() % 2 ? 1 : -1);
        const auto pt = q_point_from_c(p, A, B, c1, c2);
        if (!pt) continue;
        ++feasible;
        const double b = pt->c1 * pt->c1 * pt->lambda1 + pt->c2 * pt->c2 * pt->lambda2;
        const double a = std::pow(std::abs(pt->c1), p) * pt->lambda1 + std::pow(std::abs(pt->c2), p) * pt->lambda2;
        EXPECT_LT(rel(b, B), 1e-9);
        EXPECT_LT(rel(a, A), 1e-9);
    }
    EXPECT_GT(feasible, 20);
}

TEST(QScan, MaximumOnAxisAtP5) {
    const auto s = q_scan(5, 5, 1, 1, DiscreteRV(), QGrid{});
    const double exact = exact_bound(5, 5, 1, 1, DiscreteRV()).value;
    EXPECT_TRUE(s.best.on_axis());
    EXPECT_NEAR(std::abs(s.best.c1), 1.0, 1e-12);
    EXPECT_LT(rel(s.best_value, exact), 1e-12);
}

TEST(QScan, DeterministicAcrossThreadCounts) {
    QGrid g1;
    g1.n = 8;
    g1.threads = 1;
    QGrid g4 = g1;
    g4.threads = 4;
    const auto a = q_scan(5.5, 5.5, 1.3, 0.8, DiscreteRV(), g1);
    const auto b = q_scan(5.5, 5.5, 1.3, 0.8, DiscreteRV(), g4);
    EXPECT_EQ(a.best_value, b.best_value);
    EXPECT_EQ(a.best.c1, b.best.c1);
    EXPECT_EQ(a.best.c2, b.best.c2);
}

// Property: no grid point exceeds the exact bound.
TEST(QScanProperty, DominatedByExactBound) {
    for (double p : {5.0, 5.5, 6.0}) {
        QGrid g;
        g.n = 10;
        const auto s = q_scan(p, p, 1.0, 1.0, DiscreteRV(), g);
        const double exact = exact_bound(p, p, 1.0, 1.0, DiscreteRV()).value;
        EXPECT_LE(s.best_value, exact * (1 + 1e-8)) << p;
    }
}

TEST(QLimitRow, GapsShrinkTowardGaussianLimit) {
    const double c2[] = {10.0, 100.0, 1000.0};
    const auto rows = q_limit_row(2.5, 1, 1, 0.01, c2, DiscreteRV());
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_LT(rel(rows[0].limit, 1 + kEZ25), 1e-12);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_LT(rows[i].moment, rows[i].limit);
        if (i) {
            EXPECT_LT(rows[i].gap, rows[i - 1].gap);
        }
    }
}

TEST(LimitCompound, Examples) {
    const double c2[] = {10.0, 100.0, 1000.0};
    // a = 0: the second atom vanishes.
    for (const auto& r : limit_compound(5, 5, 1, 1, 0.5, 0.0, c2, DiscreteRV())) EXPECT_LT(r.gap, 1e-14);
    // b = c, a = 0 gives the extremal value.
    const auto lc = solve_lambda_c(5, 1, 1);
    const auto rows = limit_compound(5, 5, 1, 1, lc.c, 0.0, c2, DiscreteRV());
    EXPECT_LT(rel(rows[0].limit, exact_bound(5, 5, 1, 1, DiscreteRV()).value), 1e-12);
    // b = 0, q = 2.5: a + E|Z|^{2.5}, approached monotonically.
    const auto g = limit_compound(2.5, 2.5, 1, 1, 0.0, 0.5, c2, DiscreteRV());
    EXPECT_LT(rel(g[0].limit, 0.5 + kEZ25), 1e-12);
    EXPECT_GT(g[0].gap, g[1].gap);
    EXPECT_GT(g[1].gap, g[2].gap);
    EXPECT_THROW(limit_compound(5, 5, 1, 1, 2.0, 0.0, c2, DiscreteRV()), std::invalid_argument);
}
