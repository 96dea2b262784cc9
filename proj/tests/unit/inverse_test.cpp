#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "pointscat/error.hpp"
#include "pointscat/inverse.hpp"

using namespace pointscat;

namespace {

PointSourceOptions tiny_forward() {
    PointSourceOptions o;
    o.grid.radial = 12;
    o.grid.time = 24;
    o.grid.polar = 8;
    o.grid.azimuth = 16;
    o.quadrature.polar = 8;
    o.quadrature.azimuth = 16;
    o.quadrature.radial_panels = 6;
    return o;
}

}  // namespace

TEST(AngularDerivative, KillsRadialFunctionsAndRotatesLinearOnes) {
    const ScalarField radial = [](const Vec3& x) { return std::exp(-dot(x, x)); };
    const Vec3 x{0.3, -0.2, 0.4};
    for (auto [i, j] : {std::pair{1, 2}, {1, 3}, {2, 3}}) EXPECT_NEAR(angular_derivative(radial, i, j, x), 0.0, 1e-10);
    const ScalarField x1 = [](const Vec3& y) { return y.x; };
    EXPECT_NEAR(angular_derivative(x1, 1, 2, x), -x.y, 1e-10);
    EXPECT_THROW(angular_derivative(x1, 0, 2, x), std::invalid_argument);
}

TEST(SphericalMean, RadialErrorTermVanishes) {
    PotentialSpec spec;
    spec.width = 0.6;
    const Potential q = Potential::from_spec(spec);
    const auto m = spherical_mean_derivative(q.field(), normalized(Vec3{1, 2, 2}), 0.6);
    EXPECT_LT(std::abs(m.error_term), 1e-5);
    EXPECT_NEAR(m.leading, 0.2 * q.profile(0.4), 1e-12);
}

TEST(SphericalMean, AngularErrorRespectsBound) {
    PotentialSpec spec;
    spec.kind = "angular_bump";
    spec.width = 0.6;
    const Potential q = Potential::from_spec(spec);
    const auto m = spherical_mean_derivative(q.field(), Vec3{1, 0, 0}, 0.7, 32);
    EXPECT_GT(std::abs(m.error_term), 0.0);
    EXPECT_TRUE(m.bound_holds());
}

TEST(AngularControl, RadialFieldHasZeroRatio) {
    const ScalarField f = [](const Vec3& x) { return 1.0 + dot(x, x); };
    const auto est = angular_control_estimate(f, {0.2, 0.5}, SphereGrid(6, 12));
    EXPECT_LT(est.S, 1e-8);
}

TEST(InverseConfig, JsonRoundTripAndValidation) {
    InverseConfig c;
    c.shells = 12;
    c.damping = 0.5;
    c.symmetry = "radial";
    c.forward.grid.radial = 20;
    const InverseConfig back = InverseConfig::from_json(c.to_json());
    EXPECT_EQ(back.shells, 12);
    EXPECT_EQ(back.damping, 0.5);
    EXPECT_EQ(back.symmetry, "radial");
    EXPECT_EQ(back.forward.grid.radial, 20);
    EXPECT_THROW(InverseConfig::from_json(R"({"damping": 0})"), ConfigError);
    EXPECT_THROW(InverseConfig::from_json("{not json"), ConfigError);
}

TEST(BoundaryKernel, RejectsSingularAndOutOfRangePoints) {
    const auto sol = solve_point_source(Potential::zero(0.3), Vec3{0, 0, 1}, tiny_forward());
    EXPECT_THROW(boundary_kernel(sol, nullptr, Vec3{0, 0, 1}, 0.5), std::invalid_argument);
    EXPECT_THROW(boundary_kernel(sol, nullptr, Vec3{0, 0, 0}, 0.5), std::invalid_argument);
    const auto b = boundary_identity_check(sol, nullptr, 0.5);
    EXPECT_EQ(b.lhs, 0.0);
    EXPECT_EQ(b.rhs, 0.0);
}

TEST(Reconstruction, ShellProfileInterpolatesAndRespectsMargin) {
    ReconstructionState s;
    s.radial = true;
    s.margin_h = 0.2;
    for (int k = 0; k < 6; ++k) {
        ShellResult r;
        r.r = 0.8 - 0.1 * k;
        r.tau = 1.0 - r.r;
        r.q_hat = {1.0 - r.r};  // linear in r
        s.shells.push_back(r);
    }
    const Potential p = s.potential();
    EXPECT_NEAR(p(Vec3{0, 0.55, 0}), 0.45, 1e-12);
    EXPECT_EQ(p(Vec3{0.85, 0, 0}), 0.0);
    EXPECT_NEAR(p(Vec3{0.1, 0, 0}), 0.7, 1e-12);  // constant inward of the deepest shell
    EXPECT_FALSE(s.any_flagged());
}

TEST(Reconstruction, ZeroDataGiveZeroPotential) {
    BackscatterData d = BackscatterData::zero(2, 4, uniform_taus(24));
    InverseConfig c;
    c.shells = 6;
    c.forward = tiny_forward();
    c.margin_h = 0.3;
    const auto st = layer_strip_reconstruct(d, std::nullopt, c);
    ASSERT_EQ(st.shells.size(), 6u);
    for (const auto& sh : st.shells)
        for (double v : sh.q_hat) EXPECT_NEAR(v, 0.0, 1e-12);
    EXPECT_GT(st.shells.front().r, st.shells.back().r);
}

TEST(Reconstruction, GeneralClassNeedsTwoPolarRings) {
    BackscatterData d = BackscatterData::zero(1, 4, uniform_taus(24));
    InverseConfig c;
    c.symmetry = "general";
    c.forward = tiny_forward();
    EXPECT_THROW(layer_strip_reconstruct(d, std::nullopt, c), ConfigError);
}
