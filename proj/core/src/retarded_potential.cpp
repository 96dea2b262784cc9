#include "pointscat/retarded_potential.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numbers>
#include <stdexcept>

#include "pointscat/error.hpp"
#include "pointscat/parallel.hpp"
#include "pointscat/quadrature.hpp"

namespace pointscat {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInvFourPi = 1.0 / (4.0 * kPi);

double kernel_rule(const SpaceTimeFunction& f, const Vec3& x, double t, int n_polar, int n_azimuth, int n_radial,
                   int& nodes) {
    const double r2 = dot(x, x);
    if (t <= std::sqrt(r2)) return 0.0;
    const double rx = std::sqrt(r2);
    const Frame frame = rx > 0.0 ? Frame::along(x) : Frame{};
    const QuadratureRule& polar = gauss_legendre(n_polar);
    const QuadratureRule& radial = gauss_legendre(n_radial);
    double total = 0.0;
    for (int i = 0; i < n_polar; ++i) {
        const double c = polar.nodes[i];
        // rho_max depends on the polar angle only (the axis is along x).
        const double rmax = (t * t - r2) / (2.0 * (t - rx * c));
        double ring = 0.0;
        for (int j = 0; j < n_azimuth; ++j) {
            const Vec3 w = frame.direction(c, 2.0 * kPi * (j + 0.5) / n_azimuth);
            double line = 0.0;
            for (int k = 0; k < n_radial; ++k) {
                const double rho = 0.5 * rmax * (radial.nodes[k] + 1.0);
                line += radial.weights[k] * f(x - rho * w, t - rho) * rho;
            }
            ring += 0.5 * rmax * line;
            nodes += n_radial;
        }
        total += polar.weights[i] * (2.0 * kPi / n_azimuth) * ring;
    }
    return total * kInvFourPi;
}

struct DirectionSet {
    std::vector<Vec3> dir;
    std::vector<double> weight;
};

// Directions about a target x for K on an apex grid. Axial fields use the reflection symmetry across
// the meridian plane through x, spherical fields the rotation symmetry about the line apex-x.
DirectionSet target_directions(const ApexGrid& g, const Vec3& x, const KernelQuadrature& kq) {
    DirectionSet s;
    const QuadratureRule& polar = gauss_legendre(kq.polar);
    const Vec3 d = x - g.apex();
    const double rd = norm(d);
    switch (g.symmetry()) {
        case FieldSymmetry::spherical: {
            const Frame f = rd > 0.0 ? Frame::along(d) : g.frame();
            for (int i = 0; i < kq.polar; ++i) {
                s.dir.push_back(f.direction(polar.nodes[i], 0.0));
                s.weight.push_back(polar.weights[i] * 2.0 * kPi);
            }
            break;
        }
        case FieldSymmetry::axial: {
            const Frame& f = g.frame();
            double phx = 0.0;
            if (rd > 0.0) phx = std::atan2(dot(d, f.e2), dot(d, f.e1));
            const int na = kq.azimuth;
            for (int i = 0; i < kq.polar; ++i)
                for (int j = 0; j <= na / 2; ++j) {
                    const double mult = (j == 0 || 2 * j == na) ? 1.0 : 2.0;
                    s.dir.push_back(f.direction(polar.nodes[i], phx + 2.0 * kPi * j / na));
                    s.weight.push_back(polar.weights[i] * mult * 2.0 * kPi / na);
                }
            break;
        }
        case FieldSymmetry::general: {
            const Frame& f = g.frame();
            const int na = kq.azimuth;
            for (int i = 0; i < kq.polar; ++i)
                for (int j = 0; j < na; ++j) {
                    s.dir.push_back(f.direction(polar.nodes[i], 2.0 * kPi * j / na));
                    s.weight.push_back(polar.weights[i] * 2.0 * kPi / na);
                }
            break;
        }
    }
    return s;
}

// Visits the quadrature samples of the backward ellipsoid of (x, t_max) about the grid apex:
// fn(z, rho_z, weight, delta) with delta = |x-z| + |z-a| - |x-a| >= 0, so that a target at retarded
// time sigma sees the source at retarded time sigma - delta.
template <class Fn>
void for_each_sample(const ApexGrid& g, const Vec3& x, double t_max, const KernelQuadrature& kq, Fn&& fn) {
    const Vec3 d = x - g.apex();
    const double rx = norm(d);
    // on the cone itself (up to rounding) the ellipsoid degenerates to a segment of zero weight
    if (t_max <= rx * (1.0 + 1e-12)) return;
    const DirectionSet dirs = target_directions(g, x, kq);
    const QuadratureRule& ref = gauss_legendre(kq.panel_order);
    for (std::size_t a = 0; a < dirs.dir.size(); ++a) {
        const Vec3& w = dirs.dir[a];
        const double cap = (t_max * t_max - rx * rx) / (2.0 * (t_max - dot(d, w)));
        const double width = cap / kq.radial_panels;
        for (int p = 0; p < kq.radial_panels; ++p) {
            for (int k = 0; k < kq.panel_order; ++k) {
                const double rho = (p + 0.5 + 0.5 * ref.nodes[k]) * width;
                const double wk = 0.5 * width * ref.weights[k];
                const Vec3 z = x - rho * w;
                const double rz = norm(z - g.apex());
                const double delta = std::max(0.0, rho + rz - rx);
                fn(z, rz, dirs.weight[a] * wk * rho * kInvFourPi, delta);
            }
        }
    }
}

struct Target {
    int i;
    int d;
};

std::vector<Target> target_list(const ApexGrid& g, const std::vector<char>& active) {
    std::vector<Target> t;
    for (int i = 0; i < g.n_rho(); ++i) {
        if (g.last_sigma(i) < 0) continue;
        for (int d = 0; d < g.n_dir(); ++d) {
            if (i == 0 && d > 0) continue;  // the apex is one point
            if (!active[g.spatial_index(i, d)]) continue;
            t.push_back({i, d});
        }
    }
    return t;
}

void copy_apex_row(const ApexGrid& g, SpaceTimeField& f) {
    const double* src = f.row(0);
    for (int d = 1; d < g.n_dir(); ++d) {
        double* dst = f.row(g.spatial_index(0, d));
        for (int j = 0; j < g.n_sigma(); ++j) dst[j] = src[j];
    }
}

void residual_level(const ApexGrid& g, const ResidualSource& F, const std::vector<Target>& targets,
                    const KernelQuadrature& kq, int threads, SpaceTimeField& out) {
    const double ds = g.d_sigma();
    const auto& gm = F.g_m.values();
    parallel_for(targets.size(), threads, [&](std::size_t n) {
        const Target tg = targets[n];
        const int last = g.last_sigma(tg.i);
        const Vec3 x = g.position(tg.i, tg.d);
        double* row = out.row(g.spatial_index(tg.i, tg.d));
        const double t_max = g.rho(tg.i) + g.sigma(last);
        for_each_sample(g, x, t_max, kq, [&](const Vec3& z, double rz, double c, double delta) {
            const auto st = g.locate(z, 1);
            if (!st.inside) return;
            double G = 0.0;
            for (int k = 0; k < st.n; ++k) G += st.weight[k] * gm[st.node[k]];
            if (G == 0.0) return;
            const double cg = c * G;
            const int j0 = std::max(0, static_cast<int>(std::floor(delta / ds)));
            for (int j = j0; j <= last; ++j) {
                const double sz = j * ds - delta;
                if (sz <= 0.0) continue;
                row[j] += cg * gamma_from_invariant(F.m, sz * (sz + 2.0 * rz));
            }
        });
    });
}

void field_level(const ApexGrid& g, const ScalarField& q, const SpaceTimeField& prev,
                 const std::vector<Target>& targets, const KernelQuadrature& kq, int threads, SpaceTimeField& out) {
    const double ds = g.d_sigma();
    parallel_for(targets.size(), threads, [&](std::size_t n) {
        const Target tg = targets[n];
        const int last = g.last_sigma(tg.i);
        const Vec3 x = g.position(tg.i, tg.d);
        double* row = out.row(g.spatial_index(tg.i, tg.d));
        const double t_max = g.rho(tg.i) + g.sigma(last);
        for_each_sample(g, x, t_max, kq, [&](const Vec3& z, double, double c, double delta) {
            const double qz = q(z);
            if (qz == 0.0) return;
            const auto st = g.locate(z, 1);
            if (!st.inside) return;
            const double u = delta / ds;
            const int n0 = static_cast<int>(std::floor(u));
            if (n0 > last) return;
            const double f = u - n0;
            const double cq = c * qz;
            for (int k = 0; k < st.n; ++k) {
                const double* W = prev.row(st.node[k]);
                const double a = cq * st.weight[k] * (1.0 - f);
                const double b = cq * st.weight[k] * f;
                row[n0] += a * W[0];
                for (int j = n0 + 1; j <= last; ++j) row[j] += a * W[j - n0] + b * W[j - n0 - 1];
            }
        });
    });
}

}  // namespace

KernelEvaluation k_apply_direct(const SpaceTimeFunction& f, const Vec3& x, double t, int resolution) {
    KernelEvaluation e;
    e.x = x;
    e.t = t;
    const int n = std::max(resolution, 4);
    const int na = std::max(4, n / 2);
    e.value = kernel_rule(f, x, t, n, na, n, e.nodes);
    int coarse_nodes = 0;
    const int m = std::max(3, (3 * n) / 4);
    const double coarse = kernel_rule(f, x, t, m, std::max(4, m / 2), m, coarse_nodes);
    e.error_estimate = std::abs(e.value - coarse);
    return e;
}

namespace detail {
double lorentz_form(const std::function<double(double)>& p, const Vec3& x, double t, int resolution, double sign) {
    const double r2 = dot(x, x);
    if (t < std::sqrt(r2)) throw std::invalid_argument("k_apply_lorentz: target outside the forward cone");
    const double T = std::sqrt(std::max(0.0, t * t - r2));
    if (T == 0.0) return 0.0;
    const QuadratureRule rule = gauss_legendre(std::max(resolution, 2), 0.0, 0.5 * T);
    double s = 0.0;
    // (1/4pi) * 4 pi r^2 / r over the ball of radius T/2 in the boosted frame.
    for (int k = 0; k < rule.size(); ++k) {
        const double r = rule.nodes[k];
        s += rule.weights[k] * p(T * T + sign * 2.0 * T * r) * r;
    }
    return s;
}
}  // namespace detail

double k_apply_lorentz(const std::function<double(double)>& p, const Vec3& x, double t, int resolution) {
    return detail::lorentz_form(p, x, t, resolution, -1.0);
}

double c_m_constant(int m, double c_n) {
    double v = std::pow(c_n, m) / std::pow(4.0, m + 1);
    for (int k = 2; k <= m + 1; ++k) v /= k;
    for (int k = 2; k <= m + 2; ++k) v /= k;
    return v;
}

double neumann_tail_bound(int M, double q_bound, double f_norm, double t2_max, double c_n) {
    double tail = 0.0;
    for (int m = M + 1; m <= M + 200; ++m) {
        const double term = c_m_constant(m, c_n) * std::pow(q_bound, m) * f_norm * std::pow(t2_max, m + 1);
        tail += term;
        if (term <= 1e-18 * tail || term == 0.0) break;
    }
    return tail;
}

double NeumannSolution::evaluate(const Vec3& x, double t) const {
    const ApexGrid& g = *grid;
    double total = 0.0;
    for_each_sample(g, x, t, quadrature, [&](const Vec3& z, double rz, double c, double delta) {
        const double rx = norm(x - g.apex());
        const double sz = (t - rx) - delta;
        if (sz <= 0.0) return;
        double acc = source.g_m.interpolate(z, 1) * gamma_from_invariant(source.m, sz * (sz + 2.0 * rz));
        if (order > 0) {
            const double qz = q ? q(z) : 0.0;
            if (qz != 0.0) {
                double lv = 0.0;
                for (int m = 0; m < order; ++m) lv += terms[m].interpolate(z, sz);
                acc += qz * lv;
            }
        }
        total += c * acc;
    });
    return total;
}

std::vector<double> NeumannSolution::envelope_ratios() const {
    const ApexGrid& g = *grid;
    std::vector<double> ratios;
    // values this far below the solution scale are rounding and first-step interpolation noise
    const double floor = 1e-12 * (level_sup.empty() ? 0.0 : level_sup[0]);
    for (int m = 0; m <= order; ++m) {
        const double coef = c_m_constant(m, c_n) * std::pow(q_bound, m) * f_norm;
        double worst = 0.0;
        for (int i = 0; i < g.n_rho(); ++i)
            for (int d = 0; d < g.n_dir(); ++d) {
                if (!active[g.spatial_index(i, d)]) continue;
                for (int j = 0; j < g.n_sigma(); ++j) {
                    if (!g.nominal(i, j)) continue;
                    const double w = std::abs(terms[m].at(i, d, j));
                    if (w <= floor) continue;
                    const double s = g.sigma(j);
                    const double env = coef * std::pow(s * (s + 2.0 * g.rho(i)), m + 1);
                    worst = std::max(worst, env > 0.0 ? w / env : INFINITY);
                }
            }
        ratios.push_back(worst);
    }
    return ratios;
}

bool NeumannSolution::growth_bound_holds(double rel_slack) const {
    for (double r : envelope_ratios())
        if (!(r <= 1.0 + rel_slack)) return false;
    return true;
}

std::string NeumannSolution::sup_norms_json() const {
    nlohmann::json j;
    j["order"] = order;
    j["tail_bound"] = tail_bound;
    j["q_bound"] = q_bound;
    j["f_norm"] = f_norm;
    j["t2_max"] = t2_max;
    const auto ratios = envelope_ratios();
    for (int m = 0; m <= order; ++m)
        j["levels"].push_back({{"m", m},
                               {"sup", level_sup[m]},
                               {"c_m", c_m_constant(m, c_n)},
                               {"envelope_ratio", ratios[m]}});
    return j.dump(2);
}

NeumannSolution neumann_solve(const ScalarField& q, double q_bound, const ResidualSource& F,
                              const NeumannOptions& options) {
    const GridPtr& gp = F.grid;
    const ApexGrid& g = *gp;
    NeumannSolution sol;
    sol.grid = gp;
    sol.q = q;
    sol.source = F;
    sol.quadrature = options.quadrature;
    sol.q_bound = q_bound;
    sol.c_n = options.c_n;
    sol.f_norm = F.norm_bound();
    sol.t2_max = g.horizon() * g.horizon();

    if (options.order >= 0) {
        sol.order = options.order;
        sol.tail_bound = neumann_tail_bound(sol.order, q_bound, sol.f_norm, sol.t2_max, options.c_n);
        if (sol.tail_bound > options.tolerance)
            throw SolverError("truncation insufficient: tail bound " + std::to_string(sol.tail_bound) +
                              " exceeds tolerance at M = " + std::to_string(sol.order));
    } else {
        int M = 0;
        for (; M <= options.max_order; ++M)
            if (neumann_tail_bound(M, q_bound, sol.f_norm, sol.t2_max, options.c_n) <= options.tolerance) break;
        if (M > options.max_order) throw SolverError("truncation insufficient: no order up to the cap meets the tolerance");
        sol.order = M;
        sol.tail_bound = neumann_tail_bound(M, q_bound, sol.f_norm, sol.t2_max, options.c_n);
    }

    sol.active.assign(g.spatial_size(), 1);
    if (options.active) {
        for (int i = 0; i < g.n_rho(); ++i)
            for (int d = 0; d < g.n_dir(); ++d)
                sol.active[g.spatial_index(i, d)] = (i == 0 || options.active(g.position(i, d))) ? 1 : 0;
    }
    const auto targets = target_list(g, sol.active);

    sol.terms.emplace_back(gp);
    residual_level(g, F, targets, options.quadrature, options.threads, sol.terms.back());
    copy_apex_row(g, sol.terms.back());
    for (int m = 1; m <= sol.order; ++m) {
        SpaceTimeField next(gp);
        if (q_bound != 0.0) field_level(g, q, sol.terms.back(), targets, options.quadrature, options.threads, next);
        copy_apex_row(g, next);
        sol.terms.push_back(std::move(next));
    }
    sol.sum = SpaceTimeField(gp);
    for (const auto& w : sol.terms) {
        for (std::size_t k = 0; k < w.values().size(); ++k) sol.sum.values()[k] += w.values()[k];
        sol.level_sup.push_back(w.sup_norm());
    }
    return sol;
}

}  // namespace pointscat
