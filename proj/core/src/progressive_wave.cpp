#include "pointscat/progressive_wave.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "pointscat/error.hpp"
#include "pointscat/grid_calculus.hpp"
#include "pointscat/parallel.hpp"
#include "pointscat/quadrature.hpp"

namespace pointscat {

namespace {

constexpr int kRayNodes = 32;

// Cubic Lagrange interpolation of shell values along direction d at radius r.
double ray_value(const SpatialField& f, int d, double r) {
    const ApexGrid& g = *f.grid();
    const int n = g.n_rho();
    const double u = r / g.d_rho();
    const int base = std::clamp(static_cast<int>(std::floor(u)) - 1, 0, n - 4);
    const double x = u - base;
    const double w0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
    const double w1 = x * (x - 2.0) * (x - 3.0) / 2.0;
    const double w2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
    const double w3 = x * (x - 1.0) * (x - 2.0) / 6.0;
    return w0 * f.at(base, d) + w1 * f.at(base + 1, d) + w2 * f.at(base + 2, d) + w3 * f.at(base + 3, d);
}

SpatialField apply_operator(const SpatialField& f, const SpatialField& qn, const AngularLaplacian& ang) {
    SpatialField out = grid_laplacian(f, ang);
    for (std::size_t k = 0; k < out.values().size(); ++k) out.values()[k] += qn[k] * f[k];
    return out;
}

}  // namespace

bool CoefficientSequence::growth_ok(double slack) const {
    for (int k = 0; k <= m; ++k) {
        const double bound = std::pow((1.0 + q_sup) / 4.0, k) * growth_budget;
        if (sup_norms[k] > bound * (1.0 + slack) + 1e-300) return false;
    }
    return true;
}

double CoefficientSequence::value(int k, const Vec3& x) const { return a[k].interpolate(x, 3); }

CoefficientSequence compute_coefficients(const ScalarField& q, const ConeTrace& g, int m, GridPtr grid,
                                         int threads) {
    if (m < 1) throw SolverError("compute_coefficients: expansion order must be at least 1");
    if (m > kMaxExpansionOrder)
        throw SolverError("compute_coefficients: expansion order exceeds the smoothness budget");
    if (grid->spec().radial < 6) throw SolverError("compute_coefficients: grid too coarse for the Laplacian stencil");
    const ApexGrid& G = *grid;
    CoefficientSequence c;
    c.grid = grid;
    c.m = m;
    c.q_nodes = SpatialField(grid);
    SpatialField a0(grid);
    parallel_for(static_cast<std::size_t>(G.n_rho()), threads, [&](std::size_t ii) {
        const int i = static_cast<int>(ii);
        for (int d = 0; d < G.n_dir(); ++d) {
            const Vec3 x = G.position(i, d);
            c.q_nodes.at(i, d) = q(x);
            a0.at(i, d) = g(x);
        }
    });
    for (int i = 0; i <= G.spec().radial; ++i)
        for (int d = 0; d < G.n_dir(); ++d) c.q_sup = std::max(c.q_sup, std::abs(c.q_nodes.at(i, d)));

    const AngularLaplacian ang(G);
    const QuadratureRule s_rule = gauss_legendre(kRayNodes, 0.0, 1.0);
    c.a.push_back(std::move(a0));
    for (int k = 0; k <= m; ++k) {
        c.source.push_back(apply_operator(c.a[k], c.q_nodes, ang));
        if (k == m) break;
        const SpatialField& src = c.source[k];
        SpatialField next(grid);
        parallel_for(static_cast<std::size_t>(G.n_rho()), threads, [&](std::size_t ii) {
            const int i = static_cast<int>(ii);
            const double r = G.rho(i);
            for (int d = 0; d < G.n_dir(); ++d) {
                double acc = 0.0;
                if (i == 0) {
                    acc = src.at(0, d) / (k + 2.0);
                } else {
                    for (int p = 0; p < s_rule.size(); ++p) {
                        const double s = s_rule.nodes[p];
                        acc += s_rule.weights[p] * std::pow(s, k + 1) * ray_value(src, d, s * r);
                    }
                }
                next.at(i, d) = 0.25 * acc;
            }
        });
        c.a.push_back(std::move(next));
    }
    for (const auto& ak : c.a) c.sup_norms.push_back(ak.sup_norm());

    SpatialField lj = c.a[0];
    c.growth_budget = lj.sup_norm();
    for (int j = 1; j <= m; ++j) {
        lj = apply_operator(lj, c.q_nodes, ang);
        c.growth_budget = std::max(c.growth_budget, lj.sup_norm());
    }
    return c;
}

SpaceTimeField assemble_v(const CoefficientSequence& c) {
    const ApexGrid& G = *c.grid;
    SpaceTimeField v(c.grid);
    for (int i = 0; i < G.n_rho(); ++i) {
        const double r = G.rho(i);
        for (int d = 0; d < G.n_dir(); ++d) {
            double* row = v.row(G.spatial_index(i, d));
            for (int j = 0; j < G.n_sigma(); ++j) {
                const double s = G.sigma(j);
                const double z = s * (s + 2.0 * r);
                double acc = 0.0;
                for (int k = 0; k <= c.m; ++k) acc += c.a[k].at(i, d) * gamma_from_invariant(k, z);
                row[j] = acc;
            }
        }
    }
    return v;
}

double v_value(const CoefficientSequence& c, const Vec3& x, double t) {
    const double r = norm(x - c.grid->apex());
    const double z = t * t - r * r;
    double acc = 0.0;
    for (int k = 0; k <= c.m; ++k) acc += c.value(k, x) * gamma_from_invariant(k, z);
    return acc;
}

double ResidualSource::operator()(const Vec3& x, double t) const {
    const double r = norm(x - grid->apex());
    const double s = t - r;
    if (s <= 0.0) return 0.0;
    return g_m.interpolate(x, 1) * gamma_from_invariant(m, s * (s + 2.0 * r));
}

double ResidualSource::norm_bound() const {
    const double T = grid->horizon();
    return g_m.sup_norm() * gamma_from_invariant(m, T * T);
}

ResidualSource residual_source(const CoefficientSequence& c) { return ResidualSource{c.grid, c.m, c.source[c.m]}; }

double recursion_residual(const CoefficientSequence& c, int k) {
    const ApexGrid& G = *c.grid;
    const SpatialField& ak1 = c.a[k + 1];
    const double h = G.d_rho();
    double worst = 0.0;
    for (int i = 2; i <= G.spec().radial - 2; ++i) {
        for (int d = 0; d < G.n_dir(); ++d) {
            const double dr = (-ak1.at(i + 2, d) + 8.0 * ak1.at(i + 1, d) - 8.0 * ak1.at(i - 1, d) + ak1.at(i - 2, d)) /
                              (12.0 * h);
            const double res = 4.0 * G.rho(i) * dr + 4.0 * (2.0 + k) * ak1.at(i, d) - c.source[k].at(i, d);
            worst = std::max(worst, std::abs(res));
        }
    }
    return worst;
}

void write_coefficients_csv(const CoefficientSequence& c, std::ostream& out) {
    const ApexGrid& G = *c.grid;
    out << "x1,x2,x3,k,value\n";
    char buf[160];
    for (int k = 0; k <= c.m; ++k)
        for (int i = 0; i <= G.spec().radial; ++i)
            for (int d = 0; d < G.n_dir(); ++d) {
                const Vec3 x = G.position(i, d);
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,%.17g\n", x.x, x.y, x.z, k, c.a[k].at(i, d));
                out << buf;
            }
}

}  // namespace pointscat
