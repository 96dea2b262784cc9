#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "pointscat/apex_grid.hpp"
#include "pointscat/fields.hpp"
#include "pointscat/progressive_wave.hpp"
#include "pointscat/retarded_potential.hpp"

namespace pointscat {

struct GoursatOptions {
    GridSpec grid;
    FieldSymmetry symmetry = FieldSymmetry::general;
    Frame frame;
    int m = kDefaultExpansionOrder;
    int M = -1;               // Neumann order; negative picks it from the tail bound
    double tolerance = 1e-8;  // on the Neumann tail bound
    KernelQuadrature quadrature;
    int threads = 1;
    std::function<bool(const Vec3&)> active;
};

// u = v + w for (d_t^2 - Lap - q) u = 0 inside the cone t >= |x-a| with u = g on the cone.
struct GoursatSolution {
    GridPtr grid;
    ConeTrace g;
    ScalarField q;
    double q_bound = 0.0;
    CoefficientSequence coeffs;
    NeumannSolution neumann;
    SpaceTimeField v;
    SpaceTimeField w;
    SpaceTimeField u;

    const Vec3& apex() const { return grid->apex(); }
    // Pointwise u: v from the coefficients, w by quadrature against the stored levels.
    double value(const Vec3& x, double t) const;
    // Cheaper pointwise u with w interpolated from the grid.
    double value_interpolated(const Vec3& x, double t) const;
    // max |u - g| over the cone nodes (sigma = 0).
    double trace_error() const;
};

GoursatSolution goursat_solve(const ScalarField& q, double q_bound, const ConeTrace& g,
                              const GoursatOptions& options = {});

// max over sample points on the cone of |(d_t + d_r) u - d_r g|, with one-sided differences into the
// cone interior. Samples: radii in [0.15, 0.85] (in units of the horizon / 2) along the grid directions.
double cone_identity_residual(const GoursatSolution& sol, double step = 1e-3, int n_radii = 8);

// E(t) = integral over |x-a| <= t of u_t^2 + |grad u|^2 + u^2. Requires t <= horizon / 2.
double energy_integral(const SpaceTimeFunction& u, const Vec3& apex, double t, int radial_nodes = 16,
                       int polar = 12, double step = 1e-3);
std::vector<double> energy_trace(const GoursatSolution& sol, const std::vector<double>& times);

// max |(d_t^2 - Lap - q) u| over interior samples with t >= |x-a| + 2 step, second-order stencils.
double pde_residual(const GoursatSolution& sol, double step = 0.04, int n_samples = 24);

// Columns r,theta,phi,tau_retarded,u over the nominal nodes (angles in the grid frame).
void write_solution_csv(const GoursatSolution& sol, std::ostream& out);

}  // namespace pointscat
