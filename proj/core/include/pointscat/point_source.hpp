#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pointscat/goursat.hpp"
#include "pointscat/potential.hpp"
#include "pointscat/sphere_grid.hpp"

namespace pointscat {

// g(x) = (1/8pi) * integral_0^1 q(a + s(x-a)) ds, adaptive Gauss-Kronrod along the segment.
ConeTrace cone_data_from_potential(const Potential& q, const Vec3& a);

// Cone data from a bump seen from the boundary are sharply peaked in angle, so point-source solves
// default to a finer angular grid and one expansion level fewer than the generic Goursat solver.
inline GridSpec point_source_grid() {
    GridSpec g;
    g.polar = 32;
    g.azimuth = 64;
    return g;
}
inline KernelQuadrature point_source_quadrature() {
    KernelQuadrature k;
    k.polar = 32;
    k.azimuth = 64;
    return k;
}

struct PointSourceOptions {
    GridSpec grid = point_source_grid();
    int m = 1;
    int M = -1;
    double tolerance = 1e-8;
    KernelQuadrature quadrature = point_source_quadrature();
    int threads = 1;
    // Only compute w near supp q (plus the apex); the data and the boundary kernel never look elsewhere.
    bool restrict_to_support = true;
};

// U^a = delta(t-|x-a|)/(4 pi |x-a|) + H(t-|x-a|) r^a. The singular part is kept symbolic.
struct PointSourceSolution {
    Vec3 a;
    Potential q;
    ConeTrace g;
    GoursatSolution regular;  // r^a on an apex grid at a with frame e3 = -a

    // r^a(x,t) for t >= |x-a| (pointwise quadrature).
    double r(const Vec3& x, double t) const { return regular.value(x, t); }
    // r^a(a, 2 tau) from the stored apex row, cubic in retarded time.
    double backscatter(double tau) const;
};

PointSourceSolution solve_point_source(const Potential& q, const Vec3& a, const PointSourceOptions& options = {});

// max over cone samples of |(|x-a| d_t + 1 + (x-a).grad) r^a - q/(8 pi)|.
double transport_residual(const PointSourceSolution& sol, double step = 1e-3, int n_radii = 12);

// Samples of (a, tau) -> U^a(a, 2 tau) on a source grid over the unit sphere.
struct BackscatterData {
    int n_polar = 0;
    int n_azimuth = 0;
    std::vector<double> taus;
    std::vector<double> values;  // [source * taus.size() + k]
    std::vector<double> dtau;    // d/dtau (tau * value)

    std::size_t n_sources() const { return static_cast<std::size_t>(n_polar) * n_azimuth; }
    double value(std::size_t s, std::size_t k) const { return values[s * taus.size() + k]; }
    double derivative(std::size_t s, std::size_t k) const { return dtau[s * taus.size() + k]; }
    SphereGrid sources() const { return SphereGrid(n_polar, n_azimuth); }

    static BackscatterData zero(int n_polar, int n_azimuth, std::vector<double> taus);
};

// Uniform tau grid k * d, k = 1..n-1 with d = 1/n.
std::vector<double> uniform_taus(int n);

// 4th-order differences of tau * value in tau, one-sided at the ends.
void fill_derivative_channel(BackscatterData& d);

// Radial potentials are solved once (the data are the same for every source).
BackscatterData sample_backscatter(const Potential& q, int n_polar, int n_azimuth, const std::vector<double>& taus,
                                   const PointSourceOptions& options = {});

// max over tau of sqrt(sum_a w_a |dtau1 - dtau2|^2). Throws std::invalid_argument on grid mismatch.
double measurement_norm(const BackscatterData& d1, const BackscatterData& d2);

// CSV columns a_polar,a_azimuth,tau,value,dtau_tau_value. Reading throws ConfigError on malformed input.
void write_backscatter_csv(const BackscatterData& d, std::ostream& out);
BackscatterData read_backscatter_csv(std::istream& in);
std::string backscatter_sidecar_json(const BackscatterData& d, const PointSourceOptions& options,
                                     const std::string& potential_json);

}  // namespace pointscat
