#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mcsh/elliptic.hpp"
#include "mcsh/finite_difference.hpp"
#include "mcsh/initial_data.hpp"
#include "support/dense_oracle.hpp"

using namespace mcsh;

namespace {

constexpr double pi = std::numbers::pi;

ScalarField random_field(const Grid& g, std::uint64_t seed, int modes = 5) {
    std::mt19937_64 rng(seed);
    return detail::random_band_limited(g, rng, modes);
}

ComplexField constant(const Grid& g, Complex c) { return ComplexField(g, std::vector<Complex>(g.size(), c)); }

// dt_phi giving -Im(phi conj(dt_phi)) = s for a real constant phi = c.
ComplexField rate_for_source(const ScalarField& s, double c) {
    return pointwise([c](double v) { return Complex(0.0, v / c); }, s);
}

// lap u - |phi|^2 u - source with 20th-order differences.
double fd_residual(const ScalarField& u, const ComplexField& phi, const ScalarField& source) {
    const ScalarField r = pointwise([](double l, double uu, Complex p, double s) { return l - std::norm(p) * uu - s; },
                                    fd::laplacian(u, 20), u, phi, source);
    return l2_norm(r);
}

}  // namespace

TEST(SolvePoisson, ZeroSourceGivesZero) {
    const Grid g(16, 16, 1.0, 1.0);
    EXPECT_EQ(max_abs(solve_poisson(ScalarField(g))), 0.0);
}

TEST(SolvePoisson, SingleModeClosedForm) {
    const double lx = 3.0;
    const Grid g(32, 16, lx, 2.0);
    const ScalarField s = ScalarField::sample(g, [&](double x, double) { return std::sin(2 * pi * x / lx); });
    const ScalarField expect = ScalarField::sample(g, [&](double x, double) {
        return -std::pow(lx / (2 * pi), 2) * std::sin(2 * pi * x / lx);
    });
    EXPECT_LT(max_abs(solve_poisson(s) - expect), 1e-14);
}

TEST(SolvePoisson, RoundTripRemovesMean) {
    const Grid g(32, 32, 5.0, 4.0);
    ScalarField s = random_field(g, 1);
    for (double& v : s.values()) v += 0.7;
    const ScalarField u = solve_poisson(s);
    ScalarField expect = s;
    for (double& v : expect.values()) v -= mean(s);
    EXPECT_LT(l2_norm(laplacian(u) - expect), 1e-10 * l2_norm(expect));
    EXPECT_NEAR(mean(u), 0.0, 1e-14);
}

TEST(SolveA0, ZeroDataGivesZero) {
    const Grid g(16, 16, 4.0, 4.0);
    const auto [a0, rep] = solve_A0(ComplexField(g), ComplexField(g), VectorField(g), 1.0);
    EXPECT_EQ(max_abs(a0), 0.0);
    EXPECT_TRUE(rep.converged);
}

TEST(SolveA0, PureMagneticModeMatchesPoisson) {
    const double lx = 6.0;
    const double kappa = 1.0;
    const Grid g(32, 32, lx, 4.0);
    const VectorField a(ScalarField(g), ScalarField::sample(g, [&](double x, double) { return std::sin(2 * pi * x / lx); }));
    const auto [a0, rep] = solve_A0(ComplexField(g), ComplexField(g), a, kappa);
    // lap A0 = kappa (2 pi / lx) cos(2 pi x / lx)
    const ScalarField expect = ScalarField::sample(g, [&](double x, double) { return -kappa * lx / (2 * pi) * std::cos(2 * pi * x / lx); });
    EXPECT_LT(max_abs(a0 - expect), 1e-13);
    EXPECT_TRUE(rep.converged);
}

TEST(SolveA0, ConstantScreeningMatchesDenseSolve) {
    const Grid g(16, 16, 4.0, 3.0);
    const double c = 0.8;
    const ScalarField s = ScalarField::sample(g, [&](double x, double y) { return std::cos(2 * pi * x / 4.0) * std::sin(4 * pi * y / 3.0); });
    const ComplexField phi = constant(g, c);
    const ComplexField rate = rate_for_source(s, c);
    const auto [a0, rep] = solve_A0(phi, rate, VectorField(g), 1.0);
    ASSERT_TRUE(rep.converged);
    EXPECT_LE(rep.final_residual, 1e-12 + 1e-10 * l2_norm(s));
    const Eigen::VectorXd ref = oracle::solve_A0(phi, rate, VectorField(g), 1.0);
    EXPECT_LT((oracle::vec(a0) - ref).norm(), 1e-8 * ref.norm());
}

TEST(SolveA0, VariableScreeningMatchesDenseSolve) {
    const Grid g(16, 16, 6.0, 6.0);
    const ComplexField phi = pointwise([](double a, double b) { return Complex(0.6 + 0.3 * a, 0.3 * b); },
                                       random_field(g, 2, 3), random_field(g, 3, 3));
    const ComplexField rate = pointwise([](double a, double b) { return Complex(a, b); }, random_field(g, 4, 3), random_field(g, 5, 3));
    const VectorField a = skew_gradient(random_field(g, 6, 3));
    const auto [a0, rep] = solve_A0(phi, rate, a, 1.3);
    ASSERT_TRUE(rep.converged);
    const Eigen::VectorXd ref = oracle::solve_A0(phi, rate, a, 1.3);
    EXPECT_LT((oracle::vec(a0) - ref).norm(), 1e-8 * ref.norm());
}

TEST(SolveA0, ResidualVerifiedByFiniteDifferences) {
    // 128 points keep A0 resolved to round-off so the FD stencil sees only the solver residual
    const Grid g(128, 128, 32.0, 32.0);
    const ComplexField phi = pointwise([](double a, double b) { return Complex(0.5 * a, 0.5 * b); }, random_field(g, 7, 4), random_field(g, 8, 4));
    const ComplexField rate = pointwise([](double a) { return Complex(0.0, a); }, random_field(g, 9, 4));
    const VectorField a = skew_gradient(random_field(g, 10, 4));
    const EllipticTolerances tol{};
    const auto [a0, rep] = solve_A0(phi, rate, a, 1.0, tol);
    ASSERT_TRUE(rep.converged);
    const ScalarField src = a0_source(phi, rate, a, 1.0);
    const double bound = tol.abs + tol.rel * l2_norm(src);
    EXPECT_LE(rep.final_residual, bound);
    EXPECT_LE(fd_residual(a0, phi, src), 1.5 * bound);
}

TEST(SolveA0, IterationsDoNotGrowWithScreening) {
    const Grid g(32, 32, 8.0, 8.0);
    const ScalarField s = random_field(g, 11, 6);
    int prev = 1 << 30;
    for (double c : {0.1, 1.0, 10.0}) {
        const auto [a0, rep] = solve_A0(constant(g, c), rate_for_source(s, c), VectorField(g), 1.0);
        ASSERT_TRUE(rep.converged) << c;
        EXPECT_LE(rep.iterations, prev) << c;
        prev = rep.iterations;
    }
}

TEST(SolveA0, NonConvergenceThrowsWithReport) {
    const Grid g(32, 32, 8.0, 8.0);
    const ComplexField phi = pointwise([](double a, double b) { return Complex(1.0 + a, b); }, random_field(g, 12, 8), random_field(g, 13, 8));
    const ComplexField rate = pointwise([](double a) { return Complex(a, 0.3); }, random_field(g, 14, 8));
    EllipticTolerances tol;
    tol.max_iterations = 1;
    try {
        (void)solve_A0(phi, rate, VectorField(g), 1.0, tol);
        FAIL() << "expected EllipticSolveError";
    } catch (const EllipticSolveError& e) {
        EXPECT_FALSE(e.report().converged);
        EXPECT_EQ(e.report().iterations, 1);
        EXPECT_GT(e.report().final_residual, 0.0);
    }
}

TEST(SolveA0, WarmStartFromSolutionConvergesImmediately) {
    const Grid g(32, 32, 8.0, 8.0);
    const ComplexField phi = constant(g, 0.5);
    const ComplexField rate = rate_for_source(random_field(g, 15), 0.5);
    const auto [a0, rep] = solve_A0(phi, rate, VectorField(g), 1.0);
    const auto [again, rep2] = solve_A0(phi, rate, VectorField(g), 1.0, {}, a0);
    EXPECT_LE(rep2.iterations, 1);
    EXPECT_LT(max_abs(again - a0), 1e-10);
}

TEST(SolveA0, MismatchedGridsRejected) {
    const Grid g(16, 16, 1.0, 1.0), h(16, 16, 2.0, 1.0);
    EXPECT_THROW((void)solve_A0(ComplexField(g), ComplexField(h), VectorField(g), 1.0), std::invalid_argument);
}

TEST(LerayProject, GradientFieldsVanish) {
    const Grid g(32, 32, 5.0, 5.0);
    const VectorField b = gradient(random_field(g, 20, 8));
    EXPECT_LT(l2_norm(leray_project(b)), 1e-13 * l2_norm(b));
}

TEST(LerayProject, DivergenceFreeFieldsMapToMinusThemselves) {
    const Grid g(32, 32, 5.0, 5.0);
    const VectorField b = skew_gradient(random_field(g, 21, 8));
    VectorField pb = leray_project(b);
    pb += b;
    EXPECT_LE(l2_norm(pb), 1e-12 * l2_norm(b));
}

TEST(LerayProject, ConstantModeMapsToMinusMean) {
    const Grid g(16, 16, 1.0, 1.0);
    const VectorField b(ScalarField::sample(g, [](double, double) { return 2.0; }), ScalarField::sample(g, [](double, double) { return -1.0; }));
    const VectorField p = leray_project(b);
    EXPECT_NEAR(mean(p[0]), -2.0, 1e-14);
    EXPECT_NEAR(mean(p[1]), 1.0, 1e-14);
}

TEST(LerayProject, RandomFieldsAreProjectedAndSquareToMinus) {
    const Grid g(64, 64, 10.0, 10.0);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const VectorField b(random_field(g, 100 + seed, 10), random_field(g, 200 + seed, 10));
        const VectorField pb = leray_project(b);
        EXPECT_LT(l2_norm(divergence(pb)), 1e-10);
        VectorField ppb = leray_project(pb);
        ppb += pb;
        EXPECT_LT(l2_norm(ppb), 1e-12 * l2_norm(pb));
    }
}

TEST(LerayProject, MatchesHelmholtzDecompositionFromPoisson) {
    const Grid g(32, 32, 7.0, 5.0);
    const VectorField b(random_field(g, 30, 6), random_field(g, 31, 6));
    // B = grad chi + solenoidal part, chi = lap^{-1} div B; P B = -(solenoidal part incl. mean)
    const VectorField grad_chi = gradient(solve_poisson(divergence(b)));
    VectorField expect = b - grad_chi;
    expect *= -1.0;
    EXPECT_LT(l2_norm(leray_project(b) - expect), 1e-12 * l2_norm(b));
}

TEST(EstimateDtA0, FirstStepIsZero) {
    const Grid g(16, 16, 1.0, 1.0);
    const ScalarField cur = random_field(g, 40, 3);
    EXPECT_EQ(max_abs(estimate_dt_A0(std::nullopt, cur, 0.1)), 0.0);
}

TEST(EstimateDtA0, EqualSolvesGiveZero) {
    const Grid g(16, 16, 1.0, 1.0);
    const ScalarField cur = random_field(g, 41, 3);
    EXPECT_EQ(max_abs(estimate_dt_A0(cur, cur, 0.1)), 0.0);
}

TEST(EstimateDtA0, LinearInTimeIsExact) {
    const Grid g(16, 16, 1.0, 1.0);
    const ScalarField base = random_field(g, 42, 3);
    const ScalarField slope = random_field(g, 43, 3);
    const double dt = 0.125;  // exact in binary
    ScalarField next = base;
    next.axpy(dt, slope);
    EXPECT_LT(max_abs(estimate_dt_A0(base, next, dt) - slope), 1e-13);
}

TEST(EstimateDtA0, ManufacturedCosineIsFirstOrder) {
    const Grid g(16, 16, 1.0, 1.0);
    const ScalarField shape = random_field(g, 44, 3);
    const double t = 0.7;
    auto err = [&](double dt) {
        const ScalarField est = estimate_dt_A0(std::cos(t - dt) * shape, std::cos(t) * shape, dt);
        return l2_norm(est - (-std::sin(t)) * shape);
    };
    const double e1 = err(0.02), e2 = err(0.01);
    EXPECT_NEAR(e1 / e2, 2.0, 0.1);
}

TEST(EstimateDtA0, NonPositiveStepRejected) {
    const Grid g(16, 16, 1.0, 1.0);
    EXPECT_THROW(estimate_dt_A0(ScalarField(g), ScalarField(g), 0.0), std::invalid_argument);
}
