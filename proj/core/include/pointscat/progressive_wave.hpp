#pragma once

#include <iosfwd>
#include <vector>

#include "pointscat/apex_grid.hpp"
#include "pointscat/fields.hpp"

namespace pointscat {

// Smoothness order assumed for the synthetic data; the expansion may use at most n/2 + 1 levels.
inline constexpr int kSmoothnessOrder = 7;
inline constexpr int kDefaultExpansionOrder = (kSmoothnessOrder + 1) / 3;  // 2
inline constexpr int kMaxExpansionOrder = kSmoothnessOrder / 2 + 1;       // 4

// a_0..a_m on the spatial nodes of an apex grid, together with the sources (q + Lap) a_k.
struct CoefficientSequence {
    GridPtr grid;
    int m = 0;
    std::vector<SpatialField> a;
    std::vector<SpatialField> source;  // (q + Lap) a_k, k = 0..m
    SpatialField q_nodes;
    std::vector<double> sup_norms;     // sup |a_k| over the nominal shells
    double q_sup = 0.0;                // sup |q| sampled on the nodes
    double growth_budget = 0.0;        // max_j sup |(q + Lap)^j g|, j = 0..m

    // sup|a_k| <= ((1 + q_sup)/4)^k * growth_budget for every level.
    bool growth_ok(double slack = 1e-9) const;
    // Value of a_k at an arbitrary point (cubic along rays, linear in angle).
    double value(int k, const Vec3& x) const;
};

CoefficientSequence compute_coefficients(const ScalarField& q, const ConeTrace& g, int m, GridPtr grid,
                                         int threads = 1);

// v = sum_k a_k gamma^k on every stored node.
SpaceTimeField assemble_v(const CoefficientSequence& coeffs);

// v at an arbitrary space-time point.
double v_value(const CoefficientSequence& coeffs, const Vec3& x, double t);

// F = (q + Lap) a_m gamma^m inside the cone, 0 outside.
struct ResidualSource {
    GridPtr grid;
    int m = 0;
    SpatialField g_m;  // (q + Lap) a_m

    double operator()(const Vec3& x, double t) const;
    // Upper bound for |F| over the nominal domain: sup|g_m| times the largest gamma^m.
    double norm_bound() const;
};

ResidualSource residual_source(const CoefficientSequence& coeffs);

// Recursion residual 4 x.grad a_{k+1} + 4(2+k) a_{k+1} - (q+Lap) a_k at the grid nodes, sup over
// shells 1..radial-2 (x measured from the apex).
double recursion_residual(const CoefficientSequence& coeffs, int k);

// Columns x1,x2,x3,k,value over the nominal shells.
void write_coefficients_csv(const CoefficientSequence& coeffs, std::ostream& out);

}  // namespace pointscat
