#pragma once

#include <vector>

#include "pointscat/geometry.hpp"

namespace pointscat {

// Product rule on the unit sphere: Gauss-Legendre in cos(polar) times a uniform azimuth.
// Polar rings are ordered by increasing polar angle; azimuth_j = 2*pi*j/n_azimuth.
class SphereGrid {
public:
    SphereGrid(int n_polar, int n_azimuth);

    int n_polar() const { return n_polar_; }
    int n_azimuth() const { return n_azimuth_; }
    int size() const { return n_polar_ * n_azimuth_; }
    int index(int i, int j) const { return i * n_azimuth_ + j; }

    double cos_polar(int i) const { return cos_polar_[i]; }
    double polar(int i) const { return polar_[i]; }
    double azimuth(int j) const { return azimuth_[j]; }
    // Weight of the polar ring (integrates over [-1,1] in cos(polar)).
    double ring_weight(int i) const { return ring_weight_[i]; }
    double weight(int i, int j) const;
    double weight(int k) const { return weight(k / n_azimuth_, k % n_azimuth_); }

    Vec3 node(int i, int j, const Frame& frame = Frame{}) const;
    Vec3 node(int k, const Frame& frame = Frame{}) const { return node(k / n_azimuth_, k % n_azimuth_, frame); }

    const std::vector<double>& cos_polar_nodes() const { return cos_polar_; }
    const std::vector<double>& polar_nodes() const { return polar_; }

private:
    int n_polar_;
    int n_azimuth_;
    std::vector<double> cos_polar_;
    std::vector<double> polar_;
    std::vector<double> ring_weight_;
    std::vector<double> azimuth_;
};

}  // namespace pointscat
