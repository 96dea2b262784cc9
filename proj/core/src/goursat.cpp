#include "pointscat/goursat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "pointscat/quadrature.hpp"

namespace pointscat {

double GoursatSolution::value(const Vec3& x, double t) const { return v_value(coeffs, x, t) + neumann.evaluate(x, t); }

double GoursatSolution::value_interpolated(const Vec3& x, double t) const {
    const double r = norm(x - apex());
    return v_value(coeffs, x, t) + w.interpolate(x, t - r);
}

double GoursatSolution::trace_error() const {
    const ApexGrid& G = *grid;
    double worst = 0.0;
    for (int i = 0; i <= G.spec().radial; ++i)
        for (int d = 0; d < G.n_dir(); ++d) worst = std::max(worst, std::abs(u.at(i, d, 0) - g(G.position(i, d))));
    return worst;
}

GoursatSolution goursat_solve(const ScalarField& q, double q_bound, const ConeTrace& g, const GoursatOptions& options) {
    GoursatSolution sol;
    sol.grid = std::make_shared<const ApexGrid>(g.apex, options.frame, options.symmetry, options.grid);
    sol.g = g;
    sol.q = q;
    sol.q_bound = q_bound;
    sol.coeffs = compute_coefficients(q, g, options.m, sol.grid, options.threads);

    NeumannOptions no;
    no.order = options.M;
    no.tolerance = options.tolerance;
    no.quadrature = options.quadrature;
    no.threads = options.threads;
    no.active = options.active;
    sol.neumann = neumann_solve(q, q_bound, residual_source(sol.coeffs), no);

    sol.v = assemble_v(sol.coeffs);
    sol.w = sol.neumann.sum;
    sol.u = sol.v;
    for (std::size_t k = 0; k < sol.u.values().size(); ++k) sol.u.values()[k] += sol.w.values()[k];
    return sol;
}

double cone_identity_residual(const GoursatSolution& sol, double step, int n_radii) {
    const ApexGrid& G = *sol.grid;
    const double half = 0.5 * G.horizon();
    const Vec3& a = sol.apex();
    double worst = 0.0;
    for (int k = 0; k < n_radii; ++k) {
        const double r = half * (0.15 + 0.7 * k / std::max(1, n_radii - 1));
        for (int d = 0; d < G.n_dir(); ++d) {
            const Vec3 e = G.direction(d);
            const Vec3 x = a + r * e;
            const double t = r;
            // forward in t and backward in r both move into the cone
            const double ut = (-3.0 * sol.value(x, t) + 4.0 * sol.value(x, t + step) - sol.value(x, t + 2.0 * step)) /
                              (2.0 * step);
            const double ur = (3.0 * sol.value(x, t) - 4.0 * sol.value(x - step * e, t) +
                               sol.value(x - 2.0 * step * e, t)) /
                              (2.0 * step);
            const double gr = radial_derivative(sol.g.g ? sol.g.g : ScalarField([](const Vec3&) { return 0.0; }), x, a,
                                                step);
            worst = std::max(worst, std::abs(ut + ur - gr));
        }
    }
    return worst;
}

double energy_integral(const SpaceTimeFunction& u, const Vec3& apex, double t, int radial_nodes, int polar,
                       double step) {
    if (t <= 0.0) return 0.0;
    const QuadratureRule radial = gauss_legendre(radial_nodes, 0.0, t);
    const SphereGrid sphere(polar, 2 * polar);
    double total = 0.0;
    for (int k = 0; k < radial.size(); ++k) {
        const double r = radial.nodes[k];
        double shell = 0.0;
        for (int i = 0; i < sphere.n_polar(); ++i)
            for (int j = 0; j < sphere.n_azimuth(); ++j) {
                const Vec3 e = sphere.node(i, j);
                const Vec3 x = apex + r * e;
                const double u0 = u(x, t);
                const double ut = (-3.0 * u0 + 4.0 * u(x, t + step) - u(x, t + 2.0 * step)) / (2.0 * step);
                double ur;
                if (r > 2.0 * step)
                    ur = (3.0 * u0 - 4.0 * u(x - step * e, t) + u(x - 2.0 * step * e, t)) / (2.0 * step);
                else
                    ur = (u(x + step * e, t) - u(x - step * e, t)) / (2.0 * step);
                // tangential gradient from the two directions orthogonal to e
                const Frame f = Frame::along(e);
                const double u1 = (u(x + step * f.e1, t) - u(x - step * f.e1, t)) / (2.0 * step);
                const double u2 = (u(x + step * f.e2, t) - u(x - step * f.e2, t)) / (2.0 * step);
                shell += sphere.weight(i, j) * (ut * ut + ur * ur + u1 * u1 + u2 * u2 + u0 * u0);
            }
        total += radial.weights[k] * r * r * shell;
    }
    return total;
}

std::vector<double> energy_trace(const GoursatSolution& sol, const std::vector<double>& times) {
    const double limit = 0.5 * sol.grid->horizon();
    std::vector<double> out;
    for (double t : times) {
        if (t > limit) throw std::invalid_argument("energy_trace: time beyond the stored causal domain");
        out.push_back(energy_integral([&](const Vec3& x, double s) { return sol.value_interpolated(x, s); },
                                      sol.apex(), t));
    }
    return out;
}

double pde_residual(const GoursatSolution& sol, double step, int n_samples) {
    const ApexGrid& G = *sol.grid;
    const double T = G.horizon();
    double worst = 0.0;
    for (int k = 0; k < n_samples; ++k) {
        const double r = 0.1 * T + 0.2 * T * k / std::max(1, n_samples - 1);
        const double sigma = 2.0 * step + (T - 2.0 * r - 6.0 * step) * (0.25 + 0.5 * ((k * 7) % n_samples) / n_samples);
        const Vec3 x = sol.apex() + r * G.direction((k * 5) % G.n_dir());
        const double t = r + sigma;
        const double utt =
            (sol.value(x, t + step) - 2.0 * sol.value(x, t) + sol.value(x, t - step)) / (step * step);
        const double lap = laplacian([&](const Vec3& y) { return sol.value(y, t); }, x, step);
        const double res = utt - lap - sol.q(x) * sol.value(x, t);
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

void write_solution_csv(const GoursatSolution& sol, std::ostream& out) {
    const ApexGrid& G = *sol.grid;
    const Frame& f = G.frame();
    out << "r,theta,phi,tau_retarded,u\n";
    char buf[160];
    for (int i = 0; i <= G.spec().radial; ++i)
        for (int d = 0; d < G.n_dir(); ++d) {
            if (i == 0 && d > 0) continue;
            const Vec3 e = G.direction(d);
            const double theta = std::acos(std::clamp(dot(e, f.e3), -1.0, 1.0));
            double phi = std::atan2(dot(e, f.e2), dot(e, f.e1));
            if (phi < 0.0) phi += 2.0 * std::numbers::pi;
            for (int j = 0; j < G.n_sigma(); ++j) {
                if (!G.nominal(i, j)) continue;
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", G.rho(i), theta, phi, G.sigma(j),
                              sol.u.at(i, d, j));
                out << buf;
            }
        }
}

}  // namespace pointscat
