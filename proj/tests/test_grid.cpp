#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mcsh/finite_difference.hpp"
#include "mcsh/initial_data.hpp"
#include "mcsh/spectral.hpp"

using namespace mcsh;

namespace {

constexpr double pi = std::numbers::pi;

ScalarField random_field(const Grid& g, std::uint64_t seed, int modes = 6) {
    std::mt19937_64 rng(seed);
    return detail::random_band_limited(g, rng, modes);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Grid, RejectsOddOrTinySizes) {
    EXPECT_THROW(Grid(7, 8, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(Grid(8, 6, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(Grid(9, 9, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(Grid(8, 8, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(Grid(8, 8, 1.0, -2.0), std::invalid_argument);
    EXPECT_NO_THROW(Grid(8, 8, 1.0, 1.0));
}

TEST(Grid, SpacingsAreExactQuotients) {
    const Grid g(48, 40, 7.3, 2.9);
    EXPECT_EQ(g.dx(), 7.3 / 48);
    EXPECT_EQ(g.dy(), 2.9 / 40);
    EXPECT_EQ(g.size(), 48u * 40u);
}

TEST(Grid, WavenumberTablesAreAntisymmetric) {
    const Grid g(16, 12, 3.0, 5.0);
    ASSERT_EQ(g.kx().size(), 16u);
    ASSERT_EQ(g.ky().size(), 12u);
    for (int m = 1; m < 16; ++m) EXPECT_EQ(g.kx()[m], -g.kx()[16 - m]) << m;
    for (int m = 1; m < 12; ++m) EXPECT_EQ(g.ky()[m], -g.ky()[12 - m]) << m;
    EXPECT_EQ(g.kx()[0], 0.0);
    EXPECT_DOUBLE_EQ(g.kx()[3], 2 * pi * 3 / 3.0);
    EXPECT_DOUBLE_EQ(g.ky()[11], -2 * pi / 5.0);
}

TEST(Grid, DealiasMaskKeepsLowerTwoThirds) {
    const Grid g(12, 12, 1.0, 1.0);
    const auto mask = g.dealias_mask();
    int kept = 0;
    for (auto m : mask) kept += m;
    EXPECT_EQ(kept, 7 * 7);  // |m| <= 3 on each axis
    EXPECT_EQ(mask[0], 1);
    EXPECT_EQ(mask[4], 0);
}

TEST(Gradient, ConstantFieldHasZeroGradient) {
    const Grid g(16, 16, 2.0, 3.0);
    const ScalarField c = ScalarField::sample(g, [](double, double) { return 4.2; });
    const VectorField gr = gradient(c);
    EXPECT_LT(max_abs(gr[0]), 1e-14);
    EXPECT_LT(max_abs(gr[1]), 1e-14);
}

TEST(Gradient, SineMatchesClosedForm) {
    const double lx = 3.7;
    const Grid g(32, 16, lx, 2.0);
    const ScalarField f = ScalarField::sample(g, [&](double x, double) { return std::sin(2 * pi * x / lx); });
    const VectorField gr = gradient(f);
    const ScalarField expect = ScalarField::sample(g, [&](double x, double) { return 2 * pi / lx * std::cos(2 * pi * x / lx); });
    EXPECT_LT(max_abs(gr[0] - expect), 1e-13);
    EXPECT_LT(max_abs(gr[1]), 1e-14);
}

TEST(Gradient, ComplexFieldDifferentiatesBothParts) {
    const Grid g(16, 16, 2 * pi, 2 * pi);
    const ComplexField f = ComplexField::sample(g, [](double x, double y) { return std::exp(Complex(0, 2 * x - y)); });
    const ComplexVectorField gr = gradient(f);
    const ComplexField fx = ComplexField::sample(g, [](double x, double y) { return Complex(0, 2) * std::exp(Complex(0, 2 * x - y)); });
    EXPECT_LT(max_abs(gr[0] - fx), 1e-13);
}

TEST(Gradient, AgreesWithFourthOrderDifferencesWithinTruncationBound) {
    const Grid g(32, 32, 2 * pi, 2 * pi);
    const ScalarField f = random_field(g, 3, 5);
    const VectorField spec = gradient(f);
    const VectorField fd4 = fd::gradient(f, 4);
    // per mode |k - k_fd(k)| <= (k h)^5 / (30 h)
    const double h = g.dx();
    const double bound = std::pow(h, 4) / 30.0 * derivative_norm(f, 5);
    EXPECT_LE(l2_norm(spec[0] - fd4[0]), bound);
    EXPECT_LE(l2_norm(spec[1] - fd4[1]), bound);
    EXPECT_GT(l2_norm(spec[0] - fd4[0]), 0.0);
}

TEST(Laplacian, ConstantGivesZero) {
    const Grid g(16, 16, 1.0, 1.0);
    const ScalarField c = ScalarField::sample(g, [](double, double) { return -1.5; });
    EXPECT_LT(max_abs(laplacian(c)), 1e-13);
}

TEST(Laplacian, SineMatchesClosedForm) {
    const double lx = 5.0;
    const Grid g(32, 32, lx, 2.0);
    const ScalarField f = ScalarField::sample(g, [&](double x, double) { return std::sin(2 * pi * x / lx); });
    const double k = 2 * pi / lx;
    EXPECT_LT(max_abs(laplacian(f) + k * k * f), 1e-13);
}

TEST(Laplacian, EqualsDivergenceOfGradient) {
    const Grid g(32, 24, 4.0, 3.0);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const ScalarField f = random_field(g, seed, 9);
        const ScalarField lhs = laplacian(f);
        EXPECT_LT(max_abs(lhs - divergence(gradient(f))), 1e-12 * max_abs(lhs));
    }
}

TEST(Divergence, CurlFieldIsDivergenceFree) {
    const Grid g(32, 32, 6.0, 6.0);
    const VectorField v = skew_gradient(random_field(g, 9, 10));
    EXPECT_LT(max_abs(divergence(v)), 1e-12);
}

TEST(Divergence, AgreesWithFiniteDifferenceOracle) {
    const Grid g(32, 32, 2 * pi, 2 * pi);
    const VectorField v(random_field(g, 4, 4), random_field(g, 5, 4));
    const double h = g.dx();
    const double bound = std::pow(h, 4) / 30.0 * (derivative_norm(v[0], 5) + derivative_norm(v[1], 5));
    EXPECT_LE(l2_norm(divergence(v) - fd::divergence(v, 4)), bound);
}

TEST(Operators, AreLinear) {
    const Grid g(32, 32, 3.0, 3.0);
    const ScalarField f = random_field(g, 11);
    const ScalarField h = random_field(g, 12);
    const double a = 1.7, b = -0.4;
    ScalarField comb = a * f;
    comb.axpy(b, h);

    ScalarField lap = a * laplacian(f);
    lap.axpy(b, laplacian(h));
    EXPECT_LT(l2_norm(laplacian(comb) - lap), 1e-12 * l2_norm(lap));

    VectorField gr = a * gradient(f);
    gr.axpy(b, gradient(h));
    EXPECT_LT(l2_norm(gradient(comb) - gr), 1e-12 * l2_norm(gr));

    const VectorField v1(f, h), v2(h, f);
    VectorField vc = a * v1;
    vc.axpy(b, v2);
    ScalarField dv = a * divergence(v1);
    dv.axpy(b, divergence(v2));
    EXPECT_LT(l2_norm(divergence(vc) - dv), 1e-12 * l2_norm(dv));
}

TEST(Norms, ParsevalMatchesPhysicalSpace) {
    const Grid g(40, 24, 2.5, 1.5);
    const ScalarField f = random_field(g, 21, 8);
    EXPECT_LT(rel(spectral_l2_norm(f), l2_norm(f)), 1e-10);
    const ComplexField z = pointwise([](double a, double b) { return Complex(a, b); }, f, random_field(g, 22));
    EXPECT_LT(rel(spectral_l2_norm(z), l2_norm(z)), 1e-10);
}

TEST(HsNorm, ZeroFieldIsZero) {
    const Grid g(16, 16, 1.0, 1.0);
    for (double s : {0.0, 1.0, 2.5}) EXPECT_EQ(hs_norm(ScalarField(g), s), 0.0);
}

TEST(HsNorm, OrderZeroIsL2) {
    const Grid g(32, 32, 4.0, 4.0);
    const ScalarField f = random_field(g, 31);
    EXPECT_LT(rel(hs_norm(f, 0.0), l2_norm(f)), 1e-12);
}

TEST(HsNorm, SingleModeClosedForm) {
    const double lx = 3.0, ly = 2.0;
    const Grid g(32, 32, lx, ly);
    ScalarField f = ScalarField::sample(g, [&](double x, double) { return std::sin(2 * pi * x / lx); });
    f *= 1.0 / l2_norm(f);
    const double k2 = std::pow(2 * pi / lx, 2);
    for (double s : {0.5, 1.0, 2.0, 3.0}) EXPECT_LT(rel(hs_norm(f, s), std::pow(1 + k2, s / 2)), 1e-12) << s;
}

TEST(HsNorm, NegativeExponentRejected) {
    const Grid g(16, 16, 1.0, 1.0);
    EXPECT_THROW(hs_norm(ScalarField(g), -0.5), std::invalid_argument);
}

TEST(LpNorm, UnitFieldOnUnitTorus) {
    const Grid g(16, 16, 1.0, 1.0);
    const ScalarField one = ScalarField::sample(g, [](double, double) { return 1.0; });
    for (double p : {2.0, 3.0, 4.0, 6.0, double(INFINITY)}) EXPECT_NEAR(lp_norm(one, p), 1.0, 1e-14) << p;
}

TEST(LpNorm, ZeroFieldIsZero) {
    const Grid g(16, 16, 2.0, 2.0);
    for (double p : {2.0, 3.0, 4.0, 6.0, double(INFINITY)}) EXPECT_EQ(lp_norm(ScalarField(g), p), 0.0);
}

TEST(LpNorm, HolderBound) {
    const Grid g(32, 16, 3.0, 5.0);
    const ScalarField f = random_field(g, 41);
    for (double p : {2.0, 3.0, 4.0, 6.0}) {
        EXPECT_LE(lp_norm(f, p), lp_norm(f, double(INFINITY)) * std::pow(g.area(), 1.0 / p) * (1 + 1e-14)) << p;
    }
    EXPECT_NEAR(lp_norm(f, 2.0), l2_norm(f), 1e-12 * l2_norm(f));
}

TEST(LpNorm, UnsupportedExponentRejected) {
    const Grid g(16, 16, 1.0, 1.0);
    EXPECT_THROW(lp_norm(ScalarField(g), 5.0), std::invalid_argument);
    EXPECT_THROW(lp_norm(ScalarField(g), 1.0), std::invalid_argument);
}

TEST(FiniteDifference, FornbergWeightsReproduceClassicStencils) {
    const auto w1 = fd::centered_weights(1, 4);
    ASSERT_EQ(w1.size(), 5u);
    EXPECT_NEAR(w1[0], 1.0 / 12, 1e-15);
    EXPECT_NEAR(w1[1], -8.0 / 12, 1e-15);
    EXPECT_NEAR(w1[2], 0.0, 1e-15);
    const auto w2 = fd::centered_weights(2, 2);
    ASSERT_EQ(w2.size(), 3u);
    EXPECT_NEAR(w2[0], 1.0, 1e-15);
    EXPECT_NEAR(w2[1], -2.0, 1e-15);
}

TEST(FiniteDifference, ObservedOrderUnderRefinement) {
    std::vector<double> err;
    for (int n : {32, 64, 128}) {
        const Grid g(n, n, 2 * pi, 2 * pi);
        const ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::exp(std::sin(x) + 0.5 * std::cos(y)); });
        const ScalarField exact = ScalarField::sample(g, [](double x, double y) {
            return std::cos(x) * std::exp(std::sin(x) + 0.5 * std::cos(y));
        });
        err.push_back(l2_norm(fd::d_dx(f, 4) - exact));
    }
    EXPECT_GE(std::log2(err[0] / err[1]), 3.5);
    EXPECT_GE(std::log2(err[1] / err[2]), 3.5);
}

TEST(FiniteDifference, LaplacianOrderUnderRefinement) {
    std::vector<double> err;
    for (int n : {32, 64, 128}) {
        const Grid g(n, n, 2 * pi, 2 * pi);
        const ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::exp(std::sin(x) + 0.5 * std::cos(y)); });
        err.push_back(l2_norm(fd::laplacian(f, 4) - laplacian(f)));
    }
    EXPECT_GE(std::log2(err[0] / err[1]), 3.5);
    EXPECT_GE(std::log2(err[1] / err[2]), 3.5);
}

TEST(Fields, NonFiniteDetectedAndGridMismatchRejected) {
    const Grid g(8, 8, 1.0, 1.0);
    ScalarField f(g);
    EXPECT_TRUE(f.all_finite());
    f[3] = NAN;
    EXPECT_FALSE(f.all_finite());
    const Grid other(8, 8, 2.0, 1.0);
    EXPECT_THROW(ScalarField(g) + ScalarField(other), std::invalid_argument);
}

TEST(BandLimit, RemovesModesAboveCutoff) {
    const Grid g(32, 32, 2 * pi, 2 * pi);
    const ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::sin(2 * x) + std::cos(9 * y); });
    const ScalarField low = band_limit(f, 5.0);
    const ScalarField expect = ScalarField::sample(g, [](double x, double) { return std::sin(2 * x); });
    EXPECT_LT(max_abs(low - expect), 1e-14);
}
