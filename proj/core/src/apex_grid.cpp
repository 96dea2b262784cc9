#include "pointscat/apex_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pointscat {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

ApexGrid::ApexGrid(const Vec3& apex, const Frame& frame, FieldSymmetry symmetry, const GridSpec& spec)
    : apex_(apex), frame_(frame), symmetry_(symmetry), spec_(spec), sphere_(spec.polar, spec.azimuth) {
    if (spec.radial < 2 || spec.time < 2 || spec.polar < 2 || spec.azimuth < 2 || !(spec.horizon > 0.0))
        throw std::invalid_argument("ApexGrid: grid orders must be at least 2 and horizon positive");
    if (spec.azimuth % 2 != 0) throw std::invalid_argument("ApexGrid: azimuth count must be even");
    n_rho_ = spec.radial + 1 + kPadShells;
    d_rho_ = 0.5 * spec.horizon / spec.radial;
    d_sigma_ = spec.horizon / spec.time;

    last_sigma_.resize(n_rho_);
    for (int i = 0; i < n_rho_; ++i) {
        const double room = spec.horizon + kPadSteps * d_sigma_ - 2.0 * rho(i);
        const int last = static_cast<int>(std::floor(room / d_sigma_ + 1e-9));
        last_sigma_[i] = std::min(last, spec.time);
    }

    switch (symmetry_) {
        case FieldSymmetry::spherical:
            n_dir_ = 1;
            directions_.push_back(frame_.e3);
            direction_weight_.push_back(4.0 * std::numbers::pi);
            antipode_.push_back(0);
            break;
        case FieldSymmetry::axial:
            n_dir_ = sphere_.n_polar();
            for (int i = 0; i < n_dir_; ++i) {
                directions_.push_back(frame_.direction(sphere_.cos_polar(i), 0.0));
                direction_weight_.push_back(sphere_.ring_weight(i) * kTwoPi);
                antipode_.push_back(n_dir_ - 1 - i);
            }
            break;
        case FieldSymmetry::general:
            n_dir_ = sphere_.size();
            for (int i = 0; i < sphere_.n_polar(); ++i) {
                for (int j = 0; j < sphere_.n_azimuth(); ++j) {
                    directions_.push_back(sphere_.node(i, j, frame_));
                    direction_weight_.push_back(sphere_.weight(i, j));
                    const int ia = sphere_.n_polar() - 1 - i;
                    const int ja = (j + sphere_.n_azimuth() / 2) % sphere_.n_azimuth();
                    antipode_.push_back(sphere_.index(ia, ja));
                }
            }
            break;
    }
}

bool ApexGrid::nominal(int i, int j) const {
    return sigma(j) + 2.0 * rho(i) <= spec_.horizon + 1e-9 * spec_.horizon;
}

void ApexGrid::add_azimuth_taps(AngularTaps& taps, int ring, double phi, double w) const {
    const int n = sphere_.n_azimuth();
    double u = phi / (kTwoPi / n);
    double fl = std::floor(u);
    double g = u - fl;
    int j0 = static_cast<int>(fl) % n;
    if (j0 < 0) j0 += n;
    const int j1 = (j0 + 1) % n;
    taps.dir[taps.n] = sphere_.index(ring, j0);
    taps.weight[taps.n++] = w * (1.0 - g);
    taps.dir[taps.n] = sphere_.index(ring, j1);
    taps.weight[taps.n++] = w * g;
}

ApexGrid::AngularTaps ApexGrid::angular_taps(const Vec3& unit) const {
    AngularTaps taps;
    if (symmetry_ == FieldSymmetry::spherical) {
        taps.n = 1;
        taps.dir[0] = 0;
        taps.weight[0] = 1.0;
        return taps;
    }
    const double lz = std::clamp(dot(unit, frame_.e3), -1.0, 1.0);
    const double theta = std::acos(lz);
    const auto& polar = sphere_.polar_nodes();
    const int rings = sphere_.n_polar();
    double phi = 0.0;
    if (symmetry_ == FieldSymmetry::general) {
        phi = std::atan2(dot(unit, frame_.e2), dot(unit, frame_.e1));
        if (phi < 0.0) phi += kTwoPi;
    }
    auto add_ring = [&](int ring, double ph, double w) {
        if (w == 0.0) return;
        if (symmetry_ == FieldSymmetry::axial) {
            taps.dir[taps.n] = ring;
            taps.weight[taps.n++] = w;
        } else {
            add_azimuth_taps(taps, ring, ph, w);
        }
    };
    if (theta < polar.front()) {
        // Across the north pole: interpolate along the great circle through (ring 0, phi) and (ring 0, phi + pi).
        const double t0 = polar.front();
        add_ring(0, phi, (t0 + theta) / (2.0 * t0));
        add_ring(0, phi + std::numbers::pi, (t0 - theta) / (2.0 * t0));
    } else if (theta > polar.back()) {
        const double t0 = std::numbers::pi - polar.back();
        const double th = std::numbers::pi - theta;
        add_ring(rings - 1, phi, (t0 + th) / (2.0 * t0));
        add_ring(rings - 1, phi + std::numbers::pi, (t0 - th) / (2.0 * t0));
    } else {
        int k = static_cast<int>(std::upper_bound(polar.begin(), polar.end(), theta) - polar.begin()) - 1;
        k = std::clamp(k, 0, rings - 2);
        const double f = (theta - polar[k]) / (polar[k + 1] - polar[k]);
        add_ring(k, phi, 1.0 - f);
        add_ring(k + 1, phi, f);
    }
    if (symmetry_ == FieldSymmetry::axial && taps.n == 2 && taps.dir[0] == taps.dir[1]) {
        taps.weight[0] += taps.weight[1];
        taps.n = 1;
    }
    return taps;
}

ApexGrid::Stencil ApexGrid::locate(const Vec3& z, int rho_order) const {
    Stencil s;
    const Vec3 v = z - apex_;
    const double r = norm(v);
    s.rho = r;
    if (r > rho_max() * (1.0 + 1e-12)) return s;
    s.inside = true;

    AngularTaps ang;
    if (r < 1e-300) {
        ang.n = 1;
        ang.dir[0] = 0;
        ang.weight[0] = 1.0;
    } else {
        ang = angular_taps((1.0 / r) * v);
    }

    std::array<int, 4> ri{};
    std::array<double, 4> rw{};
    int nr = 0;
    const double u = r / d_rho_;
    if (rho_order >= 3 && n_rho_ >= 4) {
        const int i0 = static_cast<int>(std::floor(u));
        const int base = std::clamp(i0 - 1, 0, n_rho_ - 4);
        const double x = u - base;
        // Cubic Lagrange weights on nodes 0,1,2,3.
        rw[0] = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
        rw[1] = x * (x - 2.0) * (x - 3.0) / 2.0;
        rw[2] = -x * (x - 1.0) * (x - 3.0) / 2.0;
        rw[3] = x * (x - 1.0) * (x - 2.0) / 6.0;
        for (int k = 0; k < 4; ++k) ri[k] = base + k;
        nr = 4;
    } else {
        const int i0 = std::min(static_cast<int>(std::floor(u)), n_rho_ - 2);
        const double f = u - i0;
        ri[0] = i0;
        ri[1] = i0 + 1;
        rw[0] = 1.0 - f;
        rw[1] = f;
        nr = 2;
    }
    for (int a = 0; a < nr; ++a) {
        for (int b = 0; b < ang.n; ++b) {
            const double w = rw[a] * ang.weight[b];
            if (w == 0.0) continue;
            s.node[s.n] = static_cast<int>(spatial_index(ri[a], ang.dir[b]));
            s.weight[s.n++] = w;
        }
    }
    return s;
}

double SpatialField::interpolate(const Vec3& z, int rho_order) const {
    const auto s = grid_->locate(z, rho_order);
    if (!s.inside) return 0.0;
    double v = 0.0;
    for (int k = 0; k < s.n; ++k) v += s.weight[k] * values_[s.node[k]];
    return v;
}

double SpatialField::sup_norm() const {
    double m = 0.0;
    for (int i = 0; i <= grid_->spec().radial; ++i)
        for (int d = 0; d < grid_->n_dir(); ++d) m = std::max(m, std::abs(at(i, d)));
    return m;
}

double SpaceTimeField::interpolate(const Vec3& z, double sigma) const {
    if (sigma < 0.0) return 0.0;
    const auto s = grid_->locate(z, 1);
    if (!s.inside) return 0.0;
    const int ns = grid_->n_sigma();
    double u = sigma / grid_->d_sigma();
    int j0 = static_cast<int>(std::floor(u));
    if (j0 >= ns - 1) {
        j0 = ns - 2;
        u = ns - 1;
    }
    const double f = u - j0;
    double v = 0.0;
    for (int k = 0; k < s.n; ++k) {
        const double* r = row(s.node[k]);
        v += s.weight[k] * ((1.0 - f) * r[j0] + f * r[j0 + 1]);
    }
    return v;
}

double SpaceTimeField::sup_norm() const {
    double m = 0.0;
    for (int i = 0; i < grid_->n_rho(); ++i)
        for (int d = 0; d < grid_->n_dir(); ++d)
            for (int j = 0; j < grid_->n_sigma(); ++j)
                if (grid_->nominal(i, j)) m = std::max(m, std::abs(at(i, d, j)));
    return m;
}

}  // namespace pointscat
