#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "pointscat/progressive_wave.hpp"

using namespace pointscat;

namespace {

GridPtr small_grid(FieldSymmetry sym) {
    GridSpec s;
    s.radial = 12;
    s.time = 24;
    s.polar = 8;
    s.azimuth = 16;
    return std::make_shared<const ApexGrid>(Vec3{}, Frame{}, sym, s);
}

}  // namespace

// constant q, g = 1: a_k = q^k / (4^k (k+1)!)
TEST(ProgressiveWave, ConstantPotentialCoefficients) {
    const double q0 = 0.8;
    const ConeTrace g{{0, 0, 0}, [](const Vec3&) { return 1.0; }};
    const auto c = compute_coefficients([q0](const Vec3&) { return q0; }, g, 3, small_grid(FieldSymmetry::spherical));
    double expect = 1.0;
    for (int k = 0; k <= 3; ++k) {
        if (k > 0) expect *= q0 / (4.0 * (k + 1));
        EXPECT_NEAR(c.value(k, Vec3{0.1, 0.2, 0.1}), expect, 1e-10) << "k=" << k;
    }
    EXPECT_TRUE(c.growth_ok());
    for (int k = 0; k < 3; ++k) EXPECT_LT(recursion_residual(c, k), 1e-8);
}

TEST(ProgressiveWave, AssembledVMatchesPointwiseValue) {
    const ConeTrace g{{0, 0, 0}, [](const Vec3& x) { return 1.0 + 0.3 * x.z; }};
    const auto c = compute_coefficients([](const Vec3& x) { return 0.5 * std::exp(-dot(x, x)); }, g, 2,
                                        small_grid(FieldSymmetry::general));
    const SpaceTimeField v = assemble_v(c);
    const ApexGrid& G = *c.grid;
    for (int i : {2, 5}) {
        const int d = 7, j = 4;
        const Vec3 x = G.position(i, d);
        EXPECT_NEAR(v.at(i, d, j), v_value(c, x, norm(x) + G.sigma(j)), 1e-9);
    }
    // on the cone v reduces to a_0 = g
    EXPECT_NEAR(v.at(5, 3, 0), 1.0 + 0.3 * G.position(5, 3).z, 1e-9);
}

TEST(ProgressiveWave, OrderBeyondSmoothnessBudgetIsRejected) {
    const ConeTrace g{{0, 0, 0}, [](const Vec3&) { return 1.0; }};
    EXPECT_ANY_THROW(compute_coefficients([](const Vec3&) { return 0.0; }, g, kMaxExpansionOrder + 1,
                                          small_grid(FieldSymmetry::spherical)));
}

TEST(ProgressiveWave, ResidualSourceVanishesOutsideCone) {
    const ConeTrace g{{0, 0, 0}, [](const Vec3&) { return 1.0; }};
    const auto c = compute_coefficients([](const Vec3&) { return 1.0; }, g, 1, small_grid(FieldSymmetry::spherical));
    const ResidualSource F = residual_source(c);
    EXPECT_EQ(F(Vec3{0.5, 0, 0}, 0.4), 0.0);
    // (q + Lap) a_1 = 1/8 for q = 1, times gamma^1
    EXPECT_NEAR(F(Vec3{0.1, 0, 0}, 0.5), 0.125 * (0.25 - 0.01), 1e-9);
    EXPECT_GE(F.norm_bound(), std::abs(F(Vec3{0.1, 0, 0}, 0.5)));
}
