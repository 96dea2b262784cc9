#include "pointscat/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "pointscat/error.hpp"
#include "pointscat/quadrature.hpp"

namespace pointscat {

namespace {

constexpr double kPi = std::numbers::pi;

// Point at distance rho from a (|a| = 1) with |x| = s, in the meridian plane of frame.e1.
Vec3 point_from_distances(const Vec3& a, const Frame& f, double rho, double s, double phi = 0.0) {
    const double c = std::clamp((1.0 + rho * rho - s * s) / (2.0 * rho), -1.0, 1.0);
    return a + rho * f.direction(c, phi);
}

// Composite Gauss-Legendre with panels no wider than `width`.
QuadratureRule panels(double lo, double hi, double width, int order = 4) {
    const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / width - 1e-9)));
    return composite_gauss(n, order, lo, hi);
}

double radial_q_tilde(const Potential& q1, const Potential* q2, double s) {
    const Vec3 x{0.0, 0.0, s};
    return q1(x) - (q2 ? (*q2)(x) : 0.0);
}

double max_support(const PointSourceSolution& s1, const PointSourceSolution* s2) {
    double R = s1.q.is_zero() ? 0.0 : s1.q.support_radius();
    if (s2 && !s2->q.is_zero()) R = std::max(R, s2->q.support_radius());
    return R;
}

GridSpec truncated_grid(const GridSpec& base, double tau) {
    const double d_rho = 0.5 * base.horizon / base.radial;
    const double d_sigma = base.horizon / base.time;
    GridSpec g = base;
    g.radial = std::max(6, static_cast<int>(std::ceil(tau / d_rho - 1e-9)));
    g.horizon = 2.0 * g.radial * d_rho;
    g.time = std::max(6, static_cast<int>(std::lround(g.horizon / d_sigma)));
    return g;
}

}  // namespace

double boundary_kernel(const PointSourceSolution& sol1, const PointSourceSolution* sol2, const Vec3& x, double tau,
                       int t_nodes) {
    const double rho = norm(x - sol1.a);
    if (rho == 0.0) throw std::invalid_argument("boundary_kernel: kernel is singular at x = a");
    if (rho > tau * (1.0 + 1e-12)) throw std::invalid_argument("boundary_kernel: |x-a| exceeds tau");
    if (sol2 && norm(sol2->a - sol1.a) > 1e-12) throw std::invalid_argument("boundary_kernel: sources differ");
    const GoursatSolution& u1 = sol1.regular;
    const double t = 2.0 * tau - rho;
    double r_sum = u1.value_interpolated(x, t);
    double product = 0.0;
    if (sol2) {
        const GoursatSolution& u2 = sol2->regular;
        r_sum += u2.value_interpolated(x, t);
        if (t > rho) {
            const QuadratureRule rule = gauss_legendre(t_nodes, rho, t);
            for (int k = 0; k < rule.size(); ++k) {
                const double s = rule.nodes[k];
                product += rule.weights[k] * u1.value_interpolated(x, 2.0 * tau - s) * u2.value_interpolated(x, s);
            }
        }
    }
    return r_sum / (4.0 * kPi * rho) + product;
}

BoundaryIdentity boundary_identity_check(const PointSourceSolution& sol1, const PointSourceSolution* sol2, double tau,
                                         int resolution) {
    BoundaryIdentity b;
    b.lhs = sol1.backscatter(tau) - (sol2 ? sol2->backscatter(tau) : 0.0);
    const Vec3& a = sol1.a;
    const Frame f = Frame::along(-1.0 * a);
    const Potential* q2 = sol2 ? &sol2->q : nullptr;
    const double R = max_support(sol1, sol2);
    if (R <= 1.0 - tau) return b;  // the ball |x-a| <= tau misses both supports
    const double width = 1.0 / resolution;

    const bool radial = sol1.q.is_radial() && (!sol2 || sol2->q.is_radial());
    if (radial) {
        // |x-a| = tau parametrised by s = |x|: dsigma = 2 pi tau s ds
        const QuadratureRule srule = panels(1.0 - tau, R, width);
        double surf = 0.0;
        for (int k = 0; k < srule.size(); ++k) {
            const double s = srule.nodes[k];
            surf += srule.weights[k] * radial_q_tilde(sol1.q, q2, s) * 2.0 * kPi * tau * s;
        }
        b.surface_term = surf / (32.0 * kPi * kPi * tau * tau);
        // dx = 2 pi rho s drho ds on {|x-a| = rho, |x| = s}
        const QuadratureRule rrule = panels(1.0 - R, tau, width);
        double vol = 0.0;
        for (int i = 0; i < rrule.size(); ++i) {
            const double rho = rrule.nodes[i];
            const double lo = 1.0 - rho;
            if (lo >= R) continue;
            const QuadratureRule inner = panels(lo, std::min(R, 1.0 + rho), width);
            double acc = 0.0;
            for (int k = 0; k < inner.size(); ++k) {
                const double s = inner.nodes[k];
                const double qt = radial_q_tilde(sol1.q, q2, s);
                if (qt == 0.0) continue;
                const Vec3 x = point_from_distances(a, f, rho, s);
                acc += inner.weights[k] * qt * boundary_kernel(sol1, sol2, x, tau) * 2.0 * kPi * rho * s;
            }
            vol += rrule.weights[i] * acc;
        }
        b.volume_term = vol;
    } else {
        const SphereGrid sphere(resolution / 2, resolution);
        auto qt = [&](const Vec3& x) { return sol1.q(x) - (q2 ? (*q2)(x) : 0.0); };
        double surf = 0.0;
        for (int k = 0; k < sphere.size(); ++k) surf += sphere.weight(k) * qt(a + tau * sphere.node(k, f));
        b.surface_term = surf * tau * tau / (32.0 * kPi * kPi * tau * tau);
        const QuadratureRule rrule = panels(std::max(1.0 - R, 1e-6), tau, width);
        double vol = 0.0;
        for (int i = 0; i < rrule.size(); ++i) {
            const double rho = rrule.nodes[i];
            double acc = 0.0;
            for (int k = 0; k < sphere.size(); ++k) {
                const Vec3 x = a + rho * sphere.node(k, f);
                const double v = qt(x);
                if (v == 0.0) continue;
                acc += sphere.weight(k) * v * boundary_kernel(sol1, sol2, x, tau);
            }
            vol += rrule.weights[i] * rho * rho * acc;
        }
        b.volume_term = vol;
    }
    b.rhs = b.surface_term + b.volume_term;
    return b;
}

BoundaryIdentity boundary_identity_check(const Potential& q1, const Potential& q2, const Vec3& a, double tau,
                                         const PointSourceOptions& options, int resolution) {
    const PointSourceSolution s1 = solve_point_source(q1, a, options);
    if (q2.is_zero()) return boundary_identity_check(s1, nullptr, tau, resolution);
    const PointSourceSolution s2 = solve_point_source(q2, a, options);
    return boundary_identity_check(s1, &s2, tau, resolution);
}

double angular_derivative(const ScalarField& Q, int i, int j, const Vec3& x, double step) {
    if (i < 1 || i > 3 || j < 1 || j > 3) throw std::invalid_argument("angular_derivative: axes are numbered 1..3");
    auto comp = [](const Vec3& v, int k) { return k == 1 ? v.x : (k == 2 ? v.y : v.z); };
    auto unit = [](int k) { return k == 1 ? Vec3{1, 0, 0} : (k == 2 ? Vec3{0, 1, 0} : Vec3{0, 0, 1}); };
    auto d = [&](int k) {
        const Vec3 e = step * unit(k);
        return (-Q(x + 2.0 * e) + 8.0 * Q(x + e) - 8.0 * Q(x - e) + Q(x - 2.0 * e)) / (12.0 * step);
    };
    if (i == j) return 0.0;
    return comp(x, i) * d(j) - comp(x, j) * d(i);
}

SphericalMeanDerivative spherical_mean_derivative(const ScalarField& Q, const Vec3& a, double tau, int resolution,
                                                  double step) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("spherical_mean_derivative: tau must lie in (0,1)");
    const Frame f = Frame::along(-1.0 * a);
    const SphereGrid sphere(resolution, 2 * resolution);
    auto mean = [&](double t) {
        double acc = 0.0;
        for (int k = 0; k < sphere.size(); ++k) acc += sphere.weight(k) * Q(a + t * sphere.node(k, f));
        return acc * t / (4.0 * kPi);
    };
    SphericalMeanDerivative out;
    const double h = std::min(step, 0.25 * std::min(tau, 1.0 - tau));
    out.lhs = (-mean(tau + 2.0 * h) + 8.0 * mean(tau + h) - 8.0 * mean(tau - h) + mean(tau - 2.0 * h)) / (12.0 * h);
    out.leading = 0.5 * (1.0 - tau) * Q((1.0 - tau) * a);
    out.error_term = out.lhs - out.leading;

    // Bound: parametrise the sphere about a by s = |x| = 1 - tau + u^2 and the azimuth about a, so that
    // dsigma / sqrt(s - (1-tau)) = 2 tau s du dphi has no singularity.
    const QuadratureRule urule = composite_gauss(8, 8, 0.0, std::sqrt(2.0 * tau));
    const int n_phi = 2 * resolution;
    double acc = 0.0;
    for (int k = 0; k < urule.size(); ++k) {
        const double u = urule.nodes[k];
        const double s = 1.0 - tau + u * u;
        double ring = 0.0;
        for (int p = 0; p < n_phi; ++p) {
            const Vec3 x = point_from_distances(a, f, tau, s, 2.0 * kPi * p / n_phi);
            double om = 0.0;
            for (int i = 1; i <= 3; ++i)
                for (int j = i + 1; j <= 3; ++j) {
                    const double w = angular_derivative(Q, i, j, x);
                    om += w * w;
                }
            ring += om;
        }
        acc += urule.weights[k] * ring * (2.0 * kPi / n_phi) * 2.0 * tau * s;
    }
    out.bound = 3.0 / (kPi * (1.0 - tau)) * acc;
    return out;
}

AngularControlEstimate angular_control_estimate(const ScalarField& Q, const std::vector<double>& radii,
                                                const SphereGrid& sphere) {
    AngularControlEstimate est;
    est.radii = radii;
    for (double r : radii) {
        double num = 0.0, den = 0.0;
        for (int k = 0; k < sphere.size(); ++k) {
            const Vec3 x = r * sphere.node(k);
            const double q = Q(x);
            den += sphere.weight(k) * q * q;
            for (int i = 1; i <= 3; ++i)
                for (int j = i + 1; j <= 3; ++j) {
                    const double w = angular_derivative(Q, i, j, x);
                    num += sphere.weight(k) * w * w;
                }
        }
        double ratio;
        if (den > std::numeric_limits<double>::min()) {
            ratio = std::sqrt(num / den);
            est.S = std::max(est.S, ratio);
        } else {
            ratio = num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        }
        est.ratio.push_back(ratio);
    }
    return est;
}

InverseConfig InverseConfig::from_json(const std::string& text) {
    InverseConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        c.shells = j.value("shells", c.shells);
        c.fixpoint_max = j.value("fixpoint_max", c.fixpoint_max);
        c.damping = j.value("damping", c.damping);
        c.tolerance = j.value("tolerance", c.tolerance);
        c.amplification_limit = j.value("amplification_limit", c.amplification_limit);
        c.noise_floor = j.value("noise_floor", c.noise_floor);
        c.margin_h = j.value("margin_h", c.margin_h);
        c.symmetry = j.value("symmetry", c.symmetry);
        c.forward.m = j.value("m", c.forward.m);
        c.forward.M = j.value("M", c.forward.M);
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            c.forward.grid.radial = g.value("radial", c.forward.grid.radial);
            c.forward.grid.polar = g.value("polar", c.forward.grid.polar);
            c.forward.grid.azimuth = g.value("azimuth", c.forward.grid.azimuth);
            c.forward.grid.time = g.value("time", c.forward.grid.time);
            c.forward.quadrature.polar = g.value("kernel_polar", c.forward.grid.polar);
            c.forward.quadrature.azimuth = g.value("kernel_azimuth", c.forward.grid.azimuth);
            c.forward.quadrature.radial_panels = g.value("kernel_panels", c.forward.quadrature.radial_panels);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("inverse config: ") + e.what());
    }
    if (!(c.damping > 0.0 && c.damping <= 1.0)) throw ConfigError("inverse config: damping must lie in (0,1]");
    if (c.fixpoint_max < 0) throw ConfigError("inverse config: fixpoint_max must be nonnegative");
    if (!(c.margin_h > 0.0 && c.margin_h < 1.0)) throw ConfigError("inverse config: margin_h must lie in (0,1)");
    if (c.symmetry != "auto" && c.symmetry != "radial" && c.symmetry != "general")
        throw ConfigError("inverse config: symmetry must be auto, radial or general");
    return c;
}

std::string InverseConfig::to_json() const {
    nlohmann::ordered_json j;
    j["shells"] = shells;
    j["fixpoint_max"] = fixpoint_max;
    j["damping"] = damping;
    j["tolerance"] = tolerance;
    j["amplification_limit"] = amplification_limit;
    j["noise_floor"] = noise_floor;
    j["margin_h"] = margin_h;
    j["symmetry"] = symmetry;
    j["m"] = forward.m;
    j["M"] = forward.M;
    j["grid"] = {{"radial", forward.grid.radial},
                 {"polar", forward.grid.polar},
                 {"azimuth", forward.grid.azimuth},
                 {"time", forward.grid.time},
                 {"kernel_polar", forward.quadrature.polar},
                 {"kernel_azimuth", forward.quadrature.azimuth},
                 {"kernel_panels", forward.quadrature.radial_panels}};
    return j.dump(2);
}

bool ReconstructionState::any_flagged() const {
    return std::any_of(shells.begin(), shells.end(), [](const ShellResult& s) { return s.flagged; });
}

namespace {

// Cubic interpolation through shell values (r decreasing), constant inward of the last shell, zero beyond 1-h.
struct ShellProfile {
    std::vector<double> r;  // decreasing
    std::vector<double> v;
    double outer = 1.0;     // 1 - h

    double operator()(double s) const {
        if (r.empty() || s > outer) return 0.0;
        const int n = static_cast<int>(r.size());
        if (s <= r.back()) return v.back();
        if (n == 1) return v[0];
        if (s >= r.front()) {
            // between 1-h (value 0) and the first shell
            const double t = (s - r.front()) / (outer - r.front());
            return (1.0 - t) * v.front();
        }
        // r is uniform and decreasing: index from the top
        const double dr = r[0] - r[1];
        const double u = (r[0] - s) / dr;
        if (n < 4) {
            const int i = std::min(static_cast<int>(u), n - 2);
            const double t = u - i;
            return (1.0 - t) * v[i] + t * v[i + 1];
        }
        const int base = std::clamp(static_cast<int>(std::floor(u)) - 1, 0, n - 4);
        const double x = u - base;
        const double w0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
        const double w1 = x * (x - 2.0) * (x - 3.0) / 2.0;
        const double w2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
        const double w3 = x * (x - 1.0) * (x - 2.0) / 6.0;
        return w0 * v[base] + w1 * v[base + 1] + w2 * v[base + 2] + w3 * v[base + 3];
    }
    double sup() const {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
};

Potential profile_potential(const ShellProfile& p, double margin_h) {
    if (p.sup() == 0.0) return Potential::zero(margin_h);
    return Potential::radial(p, 1.0 - margin_h, margin_h, p.sup());
}

Potential sum_potential(const Potential& a, const Potential* b, double margin_h) {
    if (!b || b->is_zero()) return a;
    if (a.is_zero()) return *b;
    const double R = std::max(a.support_radius(), b->support_radius());
    if (a.is_radial() && b->is_radial())
        return Potential::radial([a, b = *b](double r) { return a.profile(r) + b.profile(r); }, R, margin_h,
                                 a.bound() + b->bound());
    return Potential::general([a, b = *b](const Vec3& x) { return a(x) + b(x); }, R, margin_h, a.bound() + b->bound());
}

// N(tau) = tau * integral over |x-a| <= tau of q_tilde k dx for radial q_tilde, in (rho, s) coordinates.
double radial_volume_term(const ShellProfile& qt, const PointSourceSolution& s1, const PointSourceSolution* s2,
                          double tau, double margin_h) {
    if (tau <= margin_h) return 0.0;
    const Frame f = Frame::along(-1.0 * s1.a);
    const double top = 1.0 - margin_h;
    const QuadratureRule rrule = panels(margin_h, tau, 0.05);
    double vol = 0.0;
    for (int i = 0; i < rrule.size(); ++i) {
        const double rho = rrule.nodes[i];
        const double lo = 1.0 - rho;
        if (lo >= top) continue;
        const QuadratureRule inner = panels(lo, top, 0.05);
        double acc = 0.0;
        for (int k = 0; k < inner.size(); ++k) {
            const double s = inner.nodes[k];
            const double q = qt(s);
            if (q == 0.0) continue;
            const Vec3 x = point_from_distances(s1.a, f, rho, s);
            acc += inner.weights[k] * q * boundary_kernel(s1, s2, x, tau, 8) * s;
        }
        vol += rrule.weights[i] * acc * 2.0 * kPi * rho;
    }
    return tau * vol;
}

// Same for a general q_tilde, spherical coordinates about a.
double general_volume_term(const ScalarField& qt, const PointSourceSolution& s1, const PointSourceSolution* s2,
                           double tau, double margin_h, const SphereGrid& sphere) {
    if (tau <= margin_h) return 0.0;
    const Frame f = Frame::along(-1.0 * s1.a);
    const QuadratureRule rrule = panels(margin_h, tau, 0.05, 3);
    double vol = 0.0;
    for (int i = 0; i < rrule.size(); ++i) {
        const double rho = rrule.nodes[i];
        double acc = 0.0;
        for (int k = 0; k < sphere.size(); ++k) {
            const Vec3 x = s1.a + rho * sphere.node(k, f);
            const double q = qt(x);
            if (q == 0.0) continue;
            acc += sphere.weight(k) * q * boundary_kernel(s1, s2, x, tau, 8);
        }
        vol += rrule.weights[i] * rho * rho * acc;
    }
    return tau * vol;
}

double backward_derivative(double n0, double n1, double n2, double h) { return (3.0 * n0 - 4.0 * n1 + n2) / (2.0 * h); }

ReconstructionState reconstruct_radial(const std::vector<double>& D, const std::vector<double>& taus,
                                       const Potential* ref, const InverseConfig& cfg, int n_shells) {
    ReconstructionState st;
    st.radial = true;
    st.margin_h = cfg.margin_h;
    const double dtau = taus[1] - taus[0];
    const Vec3 a{0.0, 0.0, 1.0};
    ShellProfile prof;
    prof.outer = 1.0 - cfg.margin_h;

    for (int j = 0; j < n_shells; ++j) {
        const double tau = taus[j];
        ShellResult sh;
        sh.tau = tau;
        sh.r = 1.0 - tau;
        const double factor = 16.0 * kPi / (1.0 - tau);
        sh.flagged = factor * cfg.noise_floor > cfg.amplification_limit;
        if (tau < cfg.margin_h) {
            sh.q_hat = {0.0};
            st.shells.push_back(sh);
            continue;
        }
        double q = factor * D[j];
        prof.r.push_back(sh.r);
        prof.v.push_back(q);
        for (int it = 0; it < cfg.fixpoint_max; ++it) {
            const Potential qhat = profile_potential(prof, cfg.margin_h);
            const Potential q1 = sum_potential(qhat, ref, cfg.margin_h);
            if (q1.is_zero()) break;
            PointSourceOptions fo = cfg.forward;
            fo.grid = truncated_grid(cfg.forward.grid, tau);
            const PointSourceSolution s1 = solve_point_source(q1, a, fo);
            std::optional<PointSourceSolution> s2;
            if (ref && !ref->is_zero()) s2 = solve_point_source(*ref, a, fo);
            const PointSourceSolution* p2 = s2 ? &*s2 : nullptr;
            double n[3];
            for (int b = 0; b < 3; ++b)
                n[b] = (j - b >= 0) ? radial_volume_term(prof, s1, p2, taus[j - b], cfg.margin_h) : 0.0;
            const double dn = backward_derivative(n[0], n[1], n[2], dtau);
            const double target = factor * (D[j] - dn);
            const double next = q + cfg.damping * (target - q);
            sh.residual = std::abs(next - q) / std::max(std::abs(next), 1e-300);
            sh.iterations = it + 1;
            q = next;
            prof.v.back() = q;
            if (sh.residual <= cfg.tolerance) break;
        }
        sh.q_hat = {q};
        st.shells.push_back(sh);
    }
    return st;
}

// Shell values on the source grid, stored on an apex grid at the origin so they can be interpolated.
struct ShellField {
    GridPtr grid;
    SpatialField values;
    int n_tau = 0;  // 1/dtau

    double operator()(const Vec3& x) const {
        const double r = norm(x);
        if (r > grid->rho(grid->spec().radial)) return 0.0;
        return values.interpolate(x, 1);
    }
};

ReconstructionState reconstruct_general(const BackscatterData& data, const std::vector<double>& D, const Potential* ref,
                                        const InverseConfig& cfg, int n_shells) {
    ReconstructionState st;
    st.radial = false;
    st.n_polar = data.n_polar;
    st.n_azimuth = data.n_azimuth;
    st.margin_h = cfg.margin_h;
    const auto& taus = data.taus;
    const double dtau = taus[1] - taus[0];
    const int n_tau = static_cast<int>(std::lround(1.0 / dtau));
    if (std::abs(taus[0] - dtau) > 1e-9 * dtau)
        throw ConfigError("general reconstruction needs the uniform tau grid k/n");
    GridSpec gs;
    gs.radial = n_tau;
    gs.polar = data.n_polar;
    gs.azimuth = data.n_azimuth;
    gs.time = 2;
    gs.horizon = 2.0;
    auto grid = std::make_shared<const ApexGrid>(Vec3{0, 0, 0}, Frame{}, FieldSymmetry::general, gs);
    ShellField field{grid, SpatialField(grid), n_tau};
    const SphereGrid src = data.sources();
    const std::size_t ns = data.n_sources();
    const std::size_t nt = taus.size();
    const SphereGrid quad_sphere(std::max(4, data.n_polar), std::max(8, data.n_azimuth));

    // shell index on the apex grid for tau_j: r = 1 - tau_j = (n - j - 1) / n
    auto shell_of = [&](int j) { return n_tau - (j + 1); };
    auto extrapolate_inward = [&](int from_shell) {
        for (int i = from_shell - 1; i >= 0; --i)
            for (std::size_t d = 0; d < ns; ++d) field.values.at(i, static_cast<int>(d)) = field.values.at(from_shell, static_cast<int>(d));
    };

    for (int j = 0; j < n_shells; ++j) {
        const double tau = taus[j];
        ShellResult sh;
        sh.tau = tau;
        sh.r = 1.0 - tau;
        const double factor = 16.0 * kPi / (1.0 - tau);
        sh.flagged = factor * cfg.noise_floor > cfg.amplification_limit;
        const int i_shell = shell_of(j);
        std::vector<double> q(ns, 0.0);
        if (tau >= cfg.margin_h) {
            for (std::size_t s = 0; s < ns; ++s) q[s] = factor * D[s * nt + j];
            for (std::size_t s = 0; s < ns; ++s) field.values.at(i_shell, static_cast<int>(s)) = q[s];
            extrapolate_inward(i_shell);
            for (int it = 0; it < cfg.fixpoint_max; ++it) {
                double sup = 0.0;
                for (double v : field.values.values()) sup = std::max(sup, std::abs(v));
                if (sup == 0.0 && !ref) break;
                const ShellField snapshot = field;
                const Potential qhat = Potential::general(snapshot, 1.0 - cfg.margin_h, cfg.margin_h, sup);
                const Potential q1 = sum_potential(qhat, ref, cfg.margin_h);
                PointSourceOptions fo = cfg.forward;
                fo.grid = truncated_grid(cfg.forward.grid, tau);
                double change = 0.0, size = 0.0;
                std::vector<double> next(ns);
                for (std::size_t s = 0; s < ns; ++s) {
                    const Vec3 a = src.node(static_cast<int>(s));
                    const PointSourceSolution s1 = solve_point_source(q1, a, fo);
                    std::optional<PointSourceSolution> s2;
                    if (ref && !ref->is_zero()) s2 = solve_point_source(*ref, a, fo);
                    const PointSourceSolution* p2 = s2 ? &*s2 : nullptr;
                    double n[3];
                    for (int b = 0; b < 3; ++b)
                        n[b] = (j - b >= 0) ? general_volume_term(snapshot, s1, p2, taus[j - b], cfg.margin_h, quad_sphere)
                                            : 0.0;
                    const double dn = backward_derivative(n[0], n[1], n[2], dtau);
                    const double E = spherical_mean_derivative(snapshot, a, tau, 16).error_term;
                    const double target = factor * (D[s * nt + j] - dn) - 2.0 * E / (1.0 - tau);
                    next[s] = q[s] + cfg.damping * (target - q[s]);
                    change = std::max(change, std::abs(next[s] - q[s]));
                    size = std::max(size, std::abs(next[s]));
                }
                q = next;
                for (std::size_t s = 0; s < ns; ++s) field.values.at(i_shell, static_cast<int>(s)) = q[s];
                extrapolate_inward(i_shell);
                sh.residual = change / std::max(size, 1e-300);
                sh.iterations = it + 1;
                if (sh.residual <= cfg.tolerance) break;
            }
        }
        sh.q_hat = q;
        st.shells.push_back(sh);
    }
    return st;
}

}  // namespace

Potential ReconstructionState::potential() const {
    if (radial) {
        ShellProfile p;
        p.outer = 1.0 - margin_h;
        for (const auto& s : shells) {
            if (s.r > p.outer) continue;
            p.r.push_back(s.r);
            p.v.push_back(s.q_hat[0]);
        }
        return profile_potential(p, margin_h);
    }
    // general: nearest-shell lookup with angular interpolation
    const int n_tau = static_cast<int>(std::lround(1.0 / (shells.size() > 1 ? shells[1].tau - shells[0].tau : 1.0)));
    GridSpec gs;
    gs.radial = n_tau;
    gs.polar = n_polar;
    gs.azimuth = n_azimuth;
    gs.time = 2;
    gs.horizon = 2.0;
    auto grid = std::make_shared<const ApexGrid>(Vec3{0, 0, 0}, Frame{}, FieldSymmetry::general, gs);
    ShellField field{grid, SpatialField(grid), n_tau};
    double sup = 0.0;
    int deepest = -1;
    for (std::size_t j = 0; j < shells.size(); ++j) {
        const int i = n_tau - static_cast<int>(j + 1);
        if (i < 0) break;
        for (std::size_t d = 0; d < shells[j].q_hat.size(); ++d) {
            field.values.at(i, static_cast<int>(d)) = shells[j].q_hat[d];
            sup = std::max(sup, std::abs(shells[j].q_hat[d]));
        }
        deepest = i;
    }
    for (int i = deepest - 1; i >= 0; --i)
        for (int d = 0; d < grid->n_dir(); ++d) field.values.at(i, d) = field.values.at(deepest, d);
    if (sup == 0.0) return Potential::zero(margin_h);
    return Potential::general(field, 1.0 - margin_h, margin_h, sup);
}

ReconstructionState layer_strip_reconstruct(const BackscatterData& data,
                                            const std::optional<ReconstructionReference>& reference,
                                            const InverseConfig& config) {
    if (data.taus.size() < 5) throw ConfigError("reconstruction needs at least five tau samples");
    if (!(config.damping > 0.0 && config.damping <= 1.0)) throw ConfigError("damping must lie in (0,1]");
    const std::size_t nt = data.taus.size();
    const std::size_t ns = data.n_sources();
    std::vector<double> D = data.dtau;
    const Potential* ref = nullptr;
    if (reference) {
        const BackscatterData& r = reference->data;
        if (r.n_polar != data.n_polar || r.n_azimuth != data.n_azimuth || r.taus != data.taus)
            throw ConfigError("reference data grid does not match");
        for (std::size_t k = 0; k < D.size(); ++k) D[k] -= r.dtau[k];
        if (!reference->potential.is_zero()) ref = &reference->potential;
    }

    bool radial;
    if (config.symmetry == "radial") {
        radial = true;
    } else if (config.symmetry == "general") {
        radial = false;
    } else {
        double scale = 0.0, spread = 0.0;
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t k = 0; k < nt; ++k) {
                scale = std::max(scale, std::abs(D[s * nt + k]));
                spread = std::max(spread, std::abs(D[s * nt + k] - D[k]));
            }
        radial = spread <= 1e-12 * scale && (!ref || ref->is_radial());
    }
    if (radial && ref && !ref->is_radial()) throw ConfigError("radial reconstruction needs a radial reference potential");
    if (!radial && data.n_polar < 2)
        throw ConfigError("general reconstruction needs at least two polar rings of sources");

    int n_shells = static_cast<int>(nt);
    if (config.shells > 0) n_shells = std::min(n_shells, config.shells);

    if (radial) {
        // project onto radial functions: source average of the derivative channel
        const SphereGrid src = data.sources();
        std::vector<double> mean(nt, 0.0);
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t k = 0; k < nt; ++k) mean[k] += src.weight(static_cast<int>(s)) * D[s * nt + k];
        for (double& m : mean) m /= 4.0 * kPi;
        ReconstructionState st = reconstruct_radial(mean, data.taus, ref, config, n_shells);
        st.n_polar = data.n_polar;
        st.n_azimuth = data.n_azimuth;
        return st;
    }
    return reconstruct_general(data, D, ref, config, n_shells);
}

void write_reconstruction_csv(const ReconstructionState& s, std::ostream& out) {
    out << "r,polar,azimuth,q_hat,residual,flagged\n";
    char buf[200];
    const SphereGrid src(std::max(1, s.n_polar), std::max(1, s.n_azimuth));
    for (const ShellResult& sh : s.shells) {
        if (s.radial) {
            std::snprintf(buf, sizeof buf, "%.17g,0,0,%.17g,%.17g,%d\n", sh.r, sh.q_hat[0], sh.residual,
                          sh.flagged ? 1 : 0);
            out << buf;
            continue;
        }
        for (std::size_t d = 0; d < sh.q_hat.size(); ++d) {
            const int i = static_cast<int>(d) / s.n_azimuth, j = static_cast<int>(d) % s.n_azimuth;
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", sh.r, src.polar(i), src.azimuth(j),
                          sh.q_hat[d], sh.residual, sh.flagged ? 1 : 0);
            out << buf;
        }
    }
}

}  // namespace pointscat
