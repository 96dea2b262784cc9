#include "pointscat/grid_calculus.hpp"

#include <cmath>
#include <numbers>

namespace pointscat {

namespace {

// Orthonormal associated Legendre functions on [-1,1]: integral of P^2 dx = 1, for l = m..L.
std::vector<double> normalized_legendre(int m, int L, double x) {
    std::vector<double> p(L + 1, 0.0);
    if (m > L) return p;
    const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    double pmm = std::sqrt(0.5);
    for (int k = 1; k <= m; ++k) pmm *= -std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * s;
    p[m] = pmm;
    if (m + 1 <= L) p[m + 1] = x * std::sqrt(2.0 * m + 3.0) * pmm;
    for (int l = m + 2; l <= L; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
        const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                   (4.0 * (l - 1) * (l - 1) - 1.0));
        p[l] = a * (x * p[l - 1] - b * p[l - 2]);
    }
    return p;
}

}  // namespace

AngularLaplacian::AngularLaplacian(const ApexGrid& grid)
    : symmetry_(grid.symmetry()), n_polar_(grid.sphere().n_polar()), n_azimuth_(grid.sphere().n_azimuth()) {
    if (symmetry_ == FieldSymmetry::spherical) return;
    const SphereGrid& sph = grid.sphere();
    const int L = n_polar_ - 1;
    m_max_ = symmetry_ == FieldSymmetry::axial ? 0 : std::min(n_azimuth_ / 2, L);
    for (int m = 0; m <= m_max_; ++m) {
        std::vector<std::vector<double>> P(n_polar_);
        for (int i = 0; i < n_polar_; ++i) P[i] = normalized_legendre(m, L, sph.cos_polar(i));
        std::vector<double> A(static_cast<std::size_t>(n_polar_) * n_polar_, 0.0);
        for (int i = 0; i < n_polar_; ++i)
            for (int k = 0; k < n_polar_; ++k) {
                double s = 0.0;
                for (int l = m; l <= L; ++l) s -= l * (l + 1.0) * P[i][l] * P[k][l];
                A[static_cast<std::size_t>(i) * n_polar_ + k] = s * sph.ring_weight(k);
            }
        mats_.push_back(std::move(A));
    }
    if (symmetry_ == FieldSymmetry::general) {
        cos_table_.resize(static_cast<std::size_t>(m_max_ + 1) * n_azimuth_);
        sin_table_.resize(cos_table_.size());
        for (int m = 0; m <= m_max_; ++m)
            for (int j = 0; j < n_azimuth_; ++j) {
                const double ph = m * sph.azimuth(j);
                cos_table_[static_cast<std::size_t>(m) * n_azimuth_ + j] = std::cos(ph);
                sin_table_[static_cast<std::size_t>(m) * n_azimuth_ + j] = std::sin(ph);
            }
    }
}

void AngularLaplacian::apply(const double* in, double* out) const {
    if (symmetry_ == FieldSymmetry::spherical) {
        out[0] = 0.0;
        return;
    }
    const int np = n_polar_;
    if (symmetry_ == FieldSymmetry::axial) {
        const auto& A = mats_[0];
        for (int i = 0; i < np; ++i) {
            double s = 0.0;
            for (int k = 0; k < np; ++k) s += A[static_cast<std::size_t>(i) * np + k] * in[k];
            out[i] = s;
        }
        return;
    }
    const int na = n_azimuth_;
    for (int k = 0; k < np * na; ++k) out[k] = 0.0;
    std::vector<double> c(np), s(np), lc(np), ls(np);
    for (int m = 0; m <= m_max_; ++m) {
        const double* ct = &cos_table_[static_cast<std::size_t>(m) * na];
        const double* st = &sin_table_[static_cast<std::size_t>(m) * na];
        const double scale = (m == 0 || 2 * m == na) ? 1.0 / na : 2.0 / na;
        for (int i = 0; i < np; ++i) {
            double a = 0.0, b = 0.0;
            for (int j = 0; j < na; ++j) {
                a += in[i * na + j] * ct[j];
                b += in[i * na + j] * st[j];
            }
            c[i] = a * scale;
            s[i] = b * scale;
        }
        const auto& A = mats_[m];
        for (int i = 0; i < np; ++i) {
            double a = 0.0, b = 0.0;
            for (int k = 0; k < np; ++k) {
                a += A[static_cast<std::size_t>(i) * np + k] * c[k];
                b += A[static_cast<std::size_t>(i) * np + k] * s[k];
            }
            lc[i] = a;
            ls[i] = b;
        }
        for (int i = 0; i < np; ++i)
            for (int j = 0; j < na; ++j) out[i * na + j] += lc[i] * ct[j] + ls[i] * st[j];
    }
}

std::vector<std::vector<double>> fd_weights(double z, const std::vector<double>& x, int max_order) {
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<double>> c(max_order + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

double shell_mean(const SpatialField& f, int i) {
    const ApexGrid& g = *f.grid();
    double s = 0.0;
    for (int d = 0; d < g.n_dir(); ++d) s += g.direction_weight(d) * f.at(i, d);
    return s / (4.0 * std::numbers::pi);
}

SpatialField grid_laplacian(const SpatialField& f) { return grid_laplacian(f, AngularLaplacian(*f.grid())); }

SpatialField grid_laplacian(const SpatialField& f, const AngularLaplacian& ang) {
    const GridPtr& gp = f.grid();
    const ApexGrid& g = *gp;
    const int n = g.n_rho();
    const int nd = g.n_dir();
    const double h = g.d_rho();
    SpatialField out(gp);

    // Stencil offsets and weights (in units of h) per shell index.
    struct Stencil {
        std::vector<int> idx;
        std::vector<double> w1, w2;
    };
    std::vector<Stencil> st(n);
    for (int i = 1; i < n; ++i) {
        std::vector<int> idx;
        if (i + 2 <= n - 1) {
            for (int k = -2; k <= 2; ++k) idx.push_back(i + k);
        } else {
            for (int k = n - 6; k <= n - 1; ++k) idx.push_back(k);
        }
        std::vector<double> x(idx.begin(), idx.end());
        auto w = fd_weights(static_cast<double>(i), x, 2);
        st[i] = {idx, w[1], w[2]};
    }

    std::vector<double> shell(nd), lap(nd);
    for (int i = 1; i < n; ++i) {
        const double r = g.rho(i);
        for (int d = 0; d < nd; ++d) shell[d] = f.at(i, d);
        ang.apply(shell.data(), lap.data());
        for (int d = 0; d < nd; ++d) {
            double d1 = 0.0, d2 = 0.0;
            const auto& s = st[i];
            for (std::size_t k = 0; k < s.idx.size(); ++k) {
                const int ii = s.idx[k];
                const double v = ii >= 0 ? f.at(ii, d) : f.at(-ii, g.antipode(d));
                d1 += s.w1[k] * v;
                d2 += s.w2[k] * v;
            }
            d1 /= h;
            d2 /= h * h;
            out.at(i, d) = d2 + 2.0 * d1 / r + lap[d] / (r * r);
        }
    }
    const double m0 = shell_mean(f, 0), m1 = shell_mean(f, 1), m2 = shell_mean(f, 2);
    const double second = (-2.0 * m2 + 32.0 * m1 - 30.0 * m0) / (12.0 * h * h);
    for (int d = 0; d < nd; ++d) out.at(0, d) = 3.0 * second;
    return out;
}

}  // namespace pointscat
