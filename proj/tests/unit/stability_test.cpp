#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "pointscat/error.hpp"
#include "pointscat/stability.hpp"

using namespace pointscat;

namespace {

std::vector<double> grid01(int n) {
    std::vector<double> t;
    for (int i = 0; i <= n; ++i) t.push_back(static_cast<double>(i) / n);
    return t;
}

}  // namespace

TEST(Gronwall, BoundFormula) {
    EXPECT_DOUBLE_EQ(gronwall_bound(2.0, 0.0, 0.0, 1.0, 0.7), 2.0);
    EXPECT_NEAR(gronwall_bound(1.0, 0.5, 0.0, 4.0, 1.0), 3.0 * std::exp(1.0), 1e-13);
}

TEST(Gronwall, InnerKernelIntegralIsPi) {
    for (auto [s0, tau] : {std::pair{0.0, 1.0}, {0.3, 0.31}, {-2.0, 5.0}})
        EXPECT_NEAR(inner_kernel_integral(s0, tau), std::numbers::pi, 1e-9);
}

TEST(Gronwall, SaturatingSolutionIsFixedPointAndBelowBound) {
    const auto taus = grid01(100);
    const std::vector<double> d(taus.size(), 0.5);
    const auto phi = abel_saturating_solution(taus, d, 0.8);
    const auto rhs = abel_rhs(taus, phi, d, 0.8);
    for (std::size_t i = 0; i < taus.size(); ++i) EXPECT_NEAR(phi[i], rhs[i], 1e-12);
    const auto chk = gronwall_verify(taus, phi, d, 0.8);
    EXPECT_TRUE(chk.ok());
    EXPECT_GT(chk.min_slack, 0.0);
}

TEST(Gronwall, ViolatingFunctionIsReported) {
    const auto taus = grid01(50);
    const std::vector<double> d(taus.size(), 1.0);
    std::vector<double> phi(taus.size(), 1e3);
    EXPECT_FALSE(gronwall_verify(taus, phi, d, 0.1).bound_holds);
}

TEST(OptimiseExponential, BranchesAndCover) {
    const auto s = optimise_exponential(1.0, 2.0, 1e-4);
    EXPECT_TRUE(s.small_lambda);
    EXPECT_NEAR(std::pow(s.ell0, 4), 2.0 / std::log(1.0 / std::sqrt(1e-4)), 1e-12);
    EXPECT_GE(s.bound, exponential_envelope(1.0, 2.0, 1e-4, s.ell0));
    const auto l = optimise_exponential(1.0, 2.0, 0.5);
    EXPECT_FALSE(l.small_lambda);
    EXPECT_NEAR(l.ell0, std::pow(2.0, 0.25), 1e-14);
    EXPECT_GE(l.bound, exponential_envelope(1.0, 2.0, 0.5, l.ell0));
}

TEST(Caps, HeightLimits) {
    EXPECT_DOUBLE_EQ(cap_height(0.5, 0.4), 0.0);  // ball misses the sphere
    EXPECT_DOUBLE_EQ(cap_height(0.9, 2.5), 2.0);
    EXPECT_NEAR(cap_height(1.0, 0.5), 0.125, 1e-15);
}

TEST(CoordsIdentity, ConstantInsideBall) {
    const auto id = coords_identity_check([](const Vec3& x) { return bump_profile(norm(x) / 0.9); }, 0.4, 16);
    EXPECT_NEAR(id.lhs1 / id.rhs1, 1.0, 1e-2);
    EXPECT_NEAR(id.lhs2 / id.rhs2, 1.0, 1e-2);
}

TEST(Noise, PatternHasUnitNormAndIsSeeded) {
    const auto a = noise_pattern(4, 8, 3, 7);
    const auto b = noise_pattern(4, 8, 3, 7);
    const auto c = noise_pattern(4, 8, 3, 8);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    const SphereGrid g(4, 8);
    double n2 = 0.0;
    for (int k = 0; k < g.size(); ++k) n2 += g.weight(k) * a[k] * a[k];
    EXPECT_NEAR(n2, 1.0, 1e-12);
}

TEST(StabilityConfig, JsonRoundTripAndValidation) {
    StabilityConfig c;
    c.n_tau = 40;
    c.noise_degree = 2;
    c.seed = 99;
    const auto back = StabilityConfig::from_json(c.to_json());
    EXPECT_EQ(back.n_tau, 40);
    EXPECT_EQ(back.noise_degree, 2);
    EXPECT_EQ(back.seed, 99u);
    EXPECT_THROW(StabilityConfig::from_json(R"({"n_tau": 3})"), ConfigError);
}

TEST(Sweep, CsvHeaderAndRows) {
    StabilityReport r;
    r.noise = 1e-3;
    r.lambda = 2e-3;
    r.shells.push_back({0.7, 0.1, 0.05, false});
    std::ostringstream os;
    write_sweep_csv({r}, os);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "noise,lambda,r,err,noise_err,flagged");
    EXPECT_NE(os.str().find("0.69999999999999996"), std::string::npos);
}
