#include "pointscat/fields.hpp"

#include <stdexcept>

namespace pointscat {

double gamma_from_invariant(int k, double z) {
    if (k < 0) return 0.0;
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v *= z / i;
    return v;
}

double gamma_eval(int k, const Vec3& x, double t) { return gamma_from_invariant(k, t * t - dot(x, x)); }

double laplacian(const ScalarField& f, const Vec3& x, double step) {
    const double h = step;
    const double c0 = f(x);
    double sum = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 e{axis == 0 ? h : 0.0, axis == 1 ? h : 0.0, axis == 2 ? h : 0.0};
        const double fp1 = f(x + e), fm1 = f(x - e);
        const double fp2 = f(x + 2.0 * e), fm2 = f(x - 2.0 * e);
        sum += (-fp2 + 16.0 * fp1 - 30.0 * c0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
    }
    return sum;
}

double radial_derivative(const ScalarField& f, const Vec3& x, const Vec3& center, double step) {
    const Vec3 d = x - center;
    const double r = norm(d);
    if (r == 0.0) throw std::invalid_argument("radial_derivative: x coincides with center");
    const Vec3 e = (step / r) * d;
    return (-f(x + 2.0 * e) + 8.0 * f(x + e) - 8.0 * f(x - e) + f(x - 2.0 * e)) / (12.0 * step);
}

double sphere_integral(const ScalarField& f, const Vec3& center, double radius, const SphereGrid& grid,
                       const Frame& frame) {
    double total = 0.0;
    for (int i = 0; i < grid.n_polar(); ++i) {
        double ring = 0.0;
        for (int j = 0; j < grid.n_azimuth(); ++j) ring += f(center + radius * grid.node(i, j, frame));
        total += grid.weight(i, 0) * ring;
    }
    return total * radius * radius;
}

}  // namespace pointscat
