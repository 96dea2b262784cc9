#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pointscat/error.hpp"
#include "pointscat/point_source.hpp"

using namespace pointscat;

TEST(PointSource, ConeDataIsSegmentAverageOverEightPi) {
    PotentialSpec spec;
    spec.width = 0.6;
    const Potential q = Potential::from_spec(spec);
    const Vec3 a{0, 0, 1};
    const ConeTrace g = cone_data_from_potential(q, a);
    const Vec3 x{0.1, 0.0, -0.4};
    double acc = 0.0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) acc += q(a + ((k + 0.5) / n) * (x - a));
    EXPECT_NEAR(g(x), acc / n / (8.0 * std::numbers::pi), 1e-7);
    EXPECT_EQ(g(Vec3{0, 0, 0.8}), 0.0);  // segment stays outside the support
}

TEST(Backscatter, UniformTaus) {
    const auto t = uniform_taus(4);
    ASSERT_EQ(t.size(), 3u);
    EXPECT_DOUBLE_EQ(t[0], 0.25);
    EXPECT_DOUBLE_EQ(t[2], 0.75);
}

TEST(Backscatter, DerivativeChannelExactOnCubics) {
    BackscatterData d = BackscatterData::zero(1, 2, uniform_taus(16));
    for (std::size_t s = 0; s < d.n_sources(); ++s)
        for (std::size_t k = 0; k < d.taus.size(); ++k) d.values[s * d.taus.size() + k] = d.taus[k] * d.taus[k];
    fill_derivative_channel(d);
    for (std::size_t k = 0; k < d.taus.size(); ++k) EXPECT_NEAR(d.derivative(1, k), 3.0 * d.taus[k] * d.taus[k], 1e-12);
}

TEST(Backscatter, MeasurementNormIsWeightedSupOverTau) {
    BackscatterData a = BackscatterData::zero(2, 4, uniform_taus(8));
    BackscatterData b = a;
    for (std::size_t s = 0; s < b.n_sources(); ++s) b.dtau[s * b.taus.size() + 3] = 0.5;
    EXPECT_NEAR(measurement_norm(a, b), 0.5 * std::sqrt(4.0 * std::numbers::pi), 1e-12);
    BackscatterData c = BackscatterData::zero(2, 2, uniform_taus(8));
    EXPECT_THROW(measurement_norm(a, c), std::invalid_argument);
}

TEST(Backscatter, CsvRoundTripAndMalformedInput) {
    BackscatterData d = BackscatterData::zero(2, 3, uniform_taus(6));
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        d.values[i] = 0.1 * i - 0.3;
        d.dtau[i] = 1.0 / (1.0 + i);
    }
    std::stringstream ss;
    write_backscatter_csv(d, ss);
    const BackscatterData back = read_backscatter_csv(ss);
    EXPECT_EQ(back.n_polar, 2);
    EXPECT_EQ(back.n_azimuth, 3);
    ASSERT_EQ(back.values.size(), d.values.size());
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        EXPECT_EQ(back.values[i], d.values[i]);
        EXPECT_EQ(back.dtau[i], d.dtau[i]);
    }
    std::stringstream bad("a_polar,a_azimuth,tau,value,dtau_tau_value\n1,2,oops,4,5\n");
    EXPECT_THROW(read_backscatter_csv(bad), ConfigError);
    std::stringstream empty("");
    EXPECT_THROW(read_backscatter_csv(empty), ConfigError);
}

TEST(PointSource, ZeroPotentialHasNoRegularPart) {
    PointSourceOptions o;
    o.grid.radial = 12;
    o.grid.time = 24;
    o.grid.polar = 8;
    o.grid.azimuth = 16;
    const auto sol = solve_point_source(Potential::zero(0.3), Vec3{0, 0, 1}, o);
    EXPECT_EQ(sol.backscatter(0.5), 0.0);
    EXPECT_EQ(sol.r(Vec3{0, 0, 0.5}, 1.0), 0.0);
}
