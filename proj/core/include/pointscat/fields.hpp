#pragma once

#include <functional>

#include "pointscat/geometry.hpp"
#include "pointscat/potential.hpp"
#include "pointscat/sphere_grid.hpp"

namespace pointscat {

using SpaceTimeFunction = std::function<double(const Vec3&, double)>;

// gamma^k(x,t) = (t^2-|x|^2)^k / k!, zero for k < 0.
double gamma_eval(int k, const Vec3& x, double t);
// Same, from the Lorentz invariant z = t^2 - |x|^2.
double gamma_from_invariant(int k, double z);

// Fourth-order central-difference Laplacian.
double laplacian(const ScalarField& f, const Vec3& x, double step);

// Central difference along (x-center)/|x-center|. Throws std::invalid_argument at x == center.
double radial_derivative(const ScalarField& f, const Vec3& x, const Vec3& center, double step);

// Quadrature of f over the sphere |y - center| = radius.
double sphere_integral(const ScalarField& f, const Vec3& center, double radius, const SphereGrid& grid,
                       const Frame& frame = Frame{});

// Goursat data on the cone t = |x - apex|: value at the space-time point (x, |x-apex|).
struct ConeTrace {
    Vec3 apex;
    ScalarField g;
    double operator()(const Vec3& x) const { return g ? g(x) : 0.0; }
};

}  // namespace pointscat
