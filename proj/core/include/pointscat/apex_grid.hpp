#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include "pointscat/geometry.hpp"
#include "pointscat/sphere_grid.hpp"

namespace pointscat {

// How many angular directions a field stores about its apex.
//   spherical: one value per shell (field depends on |x-a| only)
//   axial:     one value per polar ring (field symmetric about frame.e3)
//   general:   full SphereGrid
enum class FieldSymmetry { spherical, axial, general };

struct GridSpec {
    int radial = 48;   // shells on [0, horizon/2]
    int polar = 16;
    int azimuth = 32;
    int time = 96;     // retarded-time steps on [0, horizon]
    double horizon = 2.0;
};

// Spherical coordinates about an apex a, crossed with retarded time sigma = t - |x-a|.
// The nominal domain is the causal triangle t + |x-a| <= horizon, i.e. sigma + 2 rho <= horizon:
// every K-integral for a target there only needs sources inside it. A few padding shells and
// retarded-time steps beyond the triangle keep interpolation stencils at its edge supplied.
class ApexGrid {
public:
    static constexpr int kPadShells = 2;
    static constexpr int kPadSteps = 4;

    ApexGrid(const Vec3& apex, const Frame& frame, FieldSymmetry symmetry, const GridSpec& spec);

    const Vec3& apex() const { return apex_; }
    const Frame& frame() const { return frame_; }
    FieldSymmetry symmetry() const { return symmetry_; }
    const GridSpec& spec() const { return spec_; }
    const SphereGrid& sphere() const { return sphere_; }

    int n_rho() const { return n_rho_; }
    int n_dir() const { return n_dir_; }
    int n_sigma() const { return spec_.time + 1; }
    double d_rho() const { return d_rho_; }
    double d_sigma() const { return d_sigma_; }
    double horizon() const { return spec_.horizon; }
    double rho(int i) const { return i * d_rho_; }
    double sigma(int j) const { return j * d_sigma_; }
    double rho_max() const { return (n_rho_ - 1) * d_rho_; }

    // Last retarded-time index stored on shell i (-1 if none).
    int last_sigma(int i) const { return last_sigma_[i]; }
    // Inside the nominal causal triangle.
    bool nominal(int i, int j) const;

    Vec3 direction(int d) const { return directions_[d]; }
    // Solid angle represented by direction d (sums to 4 pi).
    double direction_weight(int d) const { return direction_weight_[d]; }
    int antipode(int d) const { return antipode_[d]; }
    Vec3 position(int i, int d) const { return apex_ + rho(i) * directions_[d]; }

    std::size_t spatial_size() const { return static_cast<std::size_t>(n_rho_) * n_dir_; }
    std::size_t spatial_index(int i, int d) const { return static_cast<std::size_t>(i) * n_dir_ + d; }

    // Interpolation stencil over spatial nodes: linear or cubic in rho, linear in angle.
    struct Stencil {
        int n = 0;
        bool inside = false;
        double rho = 0.0;
        std::array<int, 16> node{};
        std::array<double, 16> weight{};
    };
    Stencil locate(const Vec3& z, int rho_order = 1) const;

private:
    struct AngularTaps {
        int n = 0;
        std::array<int, 4> dir{};
        std::array<double, 4> weight{};
    };
    AngularTaps angular_taps(const Vec3& unit) const;
    void add_azimuth_taps(AngularTaps& taps, int ring, double phi, double w) const;

    Vec3 apex_;
    Frame frame_;
    FieldSymmetry symmetry_;
    GridSpec spec_;
    SphereGrid sphere_;
    int n_rho_ = 0;
    int n_dir_ = 0;
    double d_rho_ = 0.0;
    double d_sigma_ = 0.0;
    std::vector<int> last_sigma_;
    std::vector<Vec3> directions_;
    std::vector<double> direction_weight_;
    std::vector<int> antipode_;
};

using GridPtr = std::shared_ptr<const ApexGrid>;

// Values at spatial nodes (shell, direction).
class SpatialField {
public:
    SpatialField() = default;
    explicit SpatialField(GridPtr grid) : grid_(std::move(grid)), values_(grid_->spatial_size(), 0.0) {}

    const GridPtr& grid() const { return grid_; }
    double& at(int i, int d) { return values_[grid_->spatial_index(i, d)]; }
    double at(int i, int d) const { return values_[grid_->spatial_index(i, d)]; }
    double operator[](std::size_t k) const { return values_[k]; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double interpolate(const Vec3& z, int rho_order = 1) const;
    double sup_norm() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

// Values at (shell, direction, retarded time); retarded time is the fastest index.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    explicit SpaceTimeField(GridPtr grid)
        : grid_(std::move(grid)), values_(grid_->spatial_size() * grid_->n_sigma(), 0.0) {}

    const GridPtr& grid() const { return grid_; }
    double& at(int i, int d, int j) { return values_[offset(i, d) + j]; }
    double at(int i, int d, int j) const { return values_[offset(i, d) + j]; }
    double* row(std::size_t spatial) { return values_.data() + spatial * grid_->n_sigma(); }
    const double* row(std::size_t spatial) const { return values_.data() + spatial * grid_->n_sigma(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    // Linear in retarded time, zero for sigma < 0; value at (z, t = |z-a| + sigma).
    double interpolate(const Vec3& z, double sigma) const;
    // Sup over stored nodes inside the nominal domain.
    double sup_norm() const;

private:
    std::size_t offset(int i, int d) const { return grid_->spatial_index(i, d) * grid_->n_sigma(); }
    GridPtr grid_;
    std::vector<double> values_;
};

}  // namespace pointscat
