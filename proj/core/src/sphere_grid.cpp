#include "pointscat/sphere_grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pointscat/quadrature.hpp"

namespace pointscat {

SphereGrid::SphereGrid(int n_polar, int n_azimuth) : n_polar_(n_polar), n_azimuth_(n_azimuth) {
    if (n_polar < 1 || n_azimuth < 1) throw std::invalid_argument("SphereGrid: orders must be positive");
    const QuadratureRule& gl = gauss_legendre(n_polar);
    for (int i = 0; i < n_polar; ++i) {
        // Reverse so that the polar angle increases with i.
        const double c = -gl.nodes[i];
        cos_polar_.push_back(c);
        polar_.push_back(std::acos(c));
        ring_weight_.push_back(gl.weights[i]);
    }
    for (int j = 0; j < n_azimuth; ++j) azimuth_.push_back(2.0 * std::numbers::pi * j / n_azimuth);
}

double SphereGrid::weight(int i, int /*j*/) const {
    return ring_weight_[i] * 2.0 * std::numbers::pi / n_azimuth_;
}

Vec3 SphereGrid::node(int i, int j, const Frame& frame) const {
    return frame.direction(cos_polar_[i], azimuth_[j]);
}

}  // namespace pointscat
