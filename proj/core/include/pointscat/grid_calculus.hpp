#pragma once

#include <vector>

#include "pointscat/apex_grid.hpp"

namespace pointscat {

// Laplace-Beltrami operator on one shell of an ApexGrid, applied spectrally:
// Legendre (axial) or associated-Legendre x Fourier (general) projection with the
// Gauss-Legendre weights, scaled by -l(l+1).
class AngularLaplacian {
public:
    explicit AngularLaplacian(const ApexGrid& grid);
    // in/out hold grid.n_dir() values of one shell.
    void apply(const double* in, double* out) const;

private:
    FieldSymmetry symmetry_;
    int n_polar_ = 0;
    int n_azimuth_ = 0;
    int m_max_ = 0;
    std::vector<std::vector<double>> mats_;  // per azimuthal order m, n_polar x n_polar
    std::vector<double> cos_table_;          // [m][j]
    std::vector<double> sin_table_;
};

// Finite-difference weights (Fornberg) for derivatives 0..max_order at z from nodes x.
// Returned as weights[order][node].
std::vector<std::vector<double>> fd_weights(double z, const std::vector<double>& x, int max_order);

// Laplacian of a spatial field in apex spherical coordinates: fourth-order radial differences
// (reflected through the apex) plus the spectral angular part. At the apex it uses the
// spherical-mean relation mean_f(rho) = f(a) + rho^2 Lap f(a) / 6.
SpatialField grid_laplacian(const SpatialField& f);
SpatialField grid_laplacian(const SpatialField& f, const AngularLaplacian& ang);

// Solid-angle mean of a spatial field over shell i.
double shell_mean(const SpatialField& f, int i);

}  // namespace pointscat
