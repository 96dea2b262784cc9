#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pointscat/apex_grid.hpp"
#include "pointscat/fields.hpp"
#include "pointscat/progressive_wave.hpp"

namespace pointscat {

struct KernelEvaluation {
    Vec3 x;
    double t = 0.0;
    double value = 0.0;
    int nodes = 0;
    double error_estimate = 0.0;  // difference to a rule with 3/4 of the resolution
};

// K f(x,t) = integral of f(x-y, t-|y|) / (4 pi |y|) over |x-y| + |y| <= t, in spherical
// coordinates about the singular point with the polar axis along x.
KernelEvaluation k_apply_direct(const SpaceTimeFunction& f, const Vec3& x, double t, int resolution = 48);

// Same operator for sources p(s^2 - |y|^2) on the forward cone, reduced to one radial integral.
// Throws std::invalid_argument for t < |x|.
double k_apply_lorentz(const std::function<double(double)>& p, const Vec3& x, double t, int resolution = 48);

namespace detail {
// Lorentz form with the sign of the cross term exposed (mutation testing).
double lorentz_form(const std::function<double(double)>& p, const Vec3& x, double t, int resolution, double sign);
}

// C_m = C_n^m / (4^{m+1} (m+1)! (m+2)!).
double c_m_constant(int m, double c_n = 1.0);
// Sum over m > M of C_m bound^m f_norm t2^{m+1}.
double neumann_tail_bound(int M, double q_bound, double f_norm, double t2_max, double c_n = 1.0);

// Sampling of the backward ellipsoid when K is applied on an apex grid.
struct KernelQuadrature {
    int polar = 16;
    int azimuth = 32;
    int radial_panels = 24;
    int panel_order = 2;
};

struct NeumannOptions {
    int order = -1;            // M; negative selects the smallest M meeting the tolerance
    double tolerance = 1e-8;   // on the tail bound
    double c_n = 1.0;
    int max_order = 40;
    KernelQuadrature quadrature;
    int threads = 1;
    // Spatial nodes where w is computed; empty means all. Other rows are left at zero.
    std::function<bool(const Vec3&)> active;
};

struct NeumannSolution {
    GridPtr grid;
    std::vector<SpaceTimeField> terms;  // w_0..w_M
    SpaceTimeField sum;
    int order = 0;
    double tail_bound = 0.0;
    double q_bound = 0.0;
    double f_norm = 0.0;
    double t2_max = 0.0;
    double c_n = 1.0;
    std::vector<double> level_sup;
    std::vector<char> active;  // per spatial node

    ScalarField q;
    ResidualSource source;
    KernelQuadrature quadrature;

    // w(x,t) by direct quadrature of each level against the stored previous level.
    double evaluate(const Vec3& x, double t) const;
    // Sampled |w_m| <= C_m bound^m |F| (t^2-|x-a|^2)^{m+1} on every active nominal node where |w_m|
    // exceeds 1e-12 sup|w_0|.
    bool growth_bound_holds(double rel_slack = 1e-9) const;
    // Largest ratio |w_m| / envelope per level.
    std::vector<double> envelope_ratios() const;
    std::string sup_norms_json() const;
};

// w_0 = K F, w_{m+1} = K(q w_m) on the grid of F, translated to its apex.
// Throws SolverError("truncation insufficient ...") when the tail bound at the requested M exceeds the tolerance.
NeumannSolution neumann_solve(const ScalarField& q, double q_bound, const ResidualSource& F,
                              const NeumannOptions& options = {});

}  // namespace pointscat
