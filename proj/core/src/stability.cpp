#include "pointscat/stability.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

#include "pointscat/error.hpp"
#include "pointscat/quadrature.hpp"
#include "pointscat/sphere_grid.hpp"

namespace pointscat {

namespace {

constexpr double kPi = std::numbers::pi;

double uniform_step(const std::vector<double>& taus) {
    if (taus.size() < 2) throw std::invalid_argument("need at least two tau samples");
    const double h = taus[1] - taus[0];
    if (!(h > 0.0)) throw std::invalid_argument("tau samples must increase");
    for (std::size_t i = 1; i < taus.size(); ++i)
        if (std::abs(taus[i] - taus[i - 1] - h) > 1e-9 * h) throw std::invalid_argument("tau samples must be uniform");
    return h;
}

// Weights of phi_j in int_{t_0}^{t_i} phi(s) / sqrt(t_i - s) ds for piecewise linear phi.
std::vector<double> abel_weights(const std::vector<double>& t, std::size_t i, double h) {
    std::vector<double> w(i + 1, 0.0);
    const double ti = t[i];
    for (std::size_t j = 0; j < i; ++j) {
        const double u0 = ti - t[j], u1 = ti - t[j + 1];
        const double A = 2.0 * (std::sqrt(u0) - std::sqrt(std::max(0.0, u1)));
        const double B = u0 * A - (2.0 / 3.0) * (u0 * std::sqrt(u0) - std::max(0.0, u1) * std::sqrt(std::max(0.0, u1)));
        w[j] += A - B / h;
        w[j + 1] += B / h;
    }
    return w;
}

}  // namespace

double gronwall_bound(double d_sup, double C, double a, double b, double tau) {
    if (!(b > a)) throw std::invalid_argument("gronwall_bound: need b > a");
    if (C < 0.0) throw std::invalid_argument("gronwall_bound: need C >= 0");
    return (1.0 + 2.0 * C * std::sqrt(b - a)) * d_sup * std::exp(4.0 * C * C * tau);
}

double inner_kernel_integral(double s0, double tau) {
    if (!(tau > s0)) throw std::invalid_argument("inner_kernel_integral: need tau > s0");
    // s = s0 + x; tanh-sinh passes xc = b - x (> 0) near the right end, which avoids cancellation in L - x
    const double L = tau - s0;
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(
        [L](double x, double xc) {
            const double right = xc > 0.0 ? xc : L - x;
            return 1.0 / std::sqrt(x * right);
        },
        0.0, L);
}

std::vector<double> abel_rhs(const std::vector<double>& taus, const std::vector<double>& phi,
                             const std::vector<double>& d, double C) {
    if (phi.size() != taus.size() || d.size() != taus.size()) throw std::invalid_argument("abel_rhs: size mismatch");
    const double h = uniform_step(taus);
    std::vector<double> out(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const auto w = abel_weights(taus, i, h);
        double acc = 0.0;
        for (std::size_t j = 0; j <= i; ++j) acc += w[j] * phi[j];
        out[i] = d[i] + C * acc;
    }
    return out;
}

std::vector<double> abel_saturating_solution(const std::vector<double>& taus, const std::vector<double>& d, double C) {
    if (d.size() != taus.size()) throw std::invalid_argument("abel_saturating_solution: size mismatch");
    const double h = uniform_step(taus);
    std::vector<double> phi(taus.size());
    phi[0] = d[0];
    for (std::size_t i = 1; i < taus.size(); ++i) {
        const auto w = abel_weights(taus, i, h);
        double acc = 0.0;
        for (std::size_t j = 0; j < i; ++j) acc += w[j] * phi[j];
        phi[i] = (d[i] + C * acc) / (1.0 - C * w[i]);
    }
    return phi;
}

GronwallCheck gronwall_verify(const std::vector<double>& taus, const std::vector<double>& phi,
                              const std::vector<double>& d, double beta_C, std::uint64_t seed, int pairs) {
    if (phi.size() != taus.size() || d.size() != taus.size()) throw std::invalid_argument("gronwall_verify: size mismatch");
    GronwallCheck c;
    const double a = taus.front(), b = taus.back();
    double d_sup = 0.0;
    for (double v : d) d_sup = std::max(d_sup, v);
    const auto rhs = abel_rhs(taus, phi, d, beta_C);
    c.bound_holds = true;
    c.inequality_satisfied = true;
    c.min_slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double bound = gronwall_bound(d_sup, beta_C, a, b, taus[i]);
        if (phi[i] > bound) c.bound_holds = false;
        if (phi[i] > rhs[i] + 1e-12 * std::max(1.0, std::abs(rhs[i]))) c.inequality_satisfied = false;
        if (bound > 0.0) c.min_slack = std::min(c.min_slack, (bound - phi[i]) / bound);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < pairs; ++k) {
        double s0 = a + (b - a) * unit(rng);
        double t = a + (b - a) * unit(rng);
        if (s0 > t) std::swap(s0, t);
        if (t - s0 < 1e-9 * (b - a)) continue;
        const double I = inner_kernel_integral(s0, t);
        c.inner_max = std::max(c.inner_max, I);
        c.inner_error = std::max(c.inner_error, std::abs(I - kPi));
    }
    c.inner_within_bound = c.inner_max <= 4.0;
    return c;
}

ExponentialOptimum optimise_exponential(double A, double c, double lambda) {
    if (A < 0.0 || !(c > 0.0) || !(lambda > 0.0))
        throw std::invalid_argument("optimise_exponential: need A >= 0, c > 0, lambda > 0");
    ExponentialOptimum o;
    if (lambda < std::exp(-1.0)) {
        const double L = std::log(1.0 / lambda);
        o.small_lambda = true;
        o.ell0 = std::pow(c / (0.5 * L), 0.25);
        o.bound = (A * std::pow(2.0 * c, 0.25) + 2.0) / std::pow(L, 0.25);
    } else {
        o.ell0 = std::pow(c, 0.25);
        o.bound = (A * std::pow(c, 0.25) + 1.0) * std::exp(1.0) * lambda;
    }
    return o;
}

double exponential_envelope(double A, double c, double lambda, double ell) {
    return A * ell + lambda * std::exp(c / std::pow(ell, 4));
}

CoordsIdentity coords_identity_check(const ScalarField& f, double tau, int resolution) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("coords_identity_check: tau must lie in (0,1)");
    if (resolution < 4) throw std::invalid_argument("coords_identity_check: resolution must be at least 4");
    const int n = resolution;
    const SphereGrid sphere(n, 2 * n);
    const int panels = std::max(1, n / 8);
    CoordsIdentity out;

    // shell averages of f over |x| = r
    auto shell = [&](double r) {
        double acc = 0.0;
        for (int k = 0; k < sphere.size(); ++k) acc += sphere.weight(k) * f(r * sphere.node(k));
        return acc;
    };
    const QuadratureRule rr = composite_gauss(panels, 8, 1.0 - tau, 1.0);
    for (int i = 0; i < rr.size(); ++i) {
        const double r = rr.nodes[i];
        const double sh = shell(r) * r * r * rr.weights[i];
        out.rhs1 += sh / r;
        out.rhs2 += sh * (tau * tau - (1.0 - r) * (1.0 - r)) / r;
    }
    out.rhs1 *= 2.0 * kPi * tau;
    out.rhs2 *= kPi;

    // spherical means are smooth in the radius: one Gauss panel is enough
    const QuadratureRule rho = gauss_legendre(12, 0.0, tau);
    for (int k = 0; k < sphere.size(); ++k) {
        const Vec3 a = sphere.node(k);
        const Frame fr = Frame::along(-a);
        auto inner = [&](double radius) {
            double acc = 0.0;
            for (int l = 0; l < sphere.size(); ++l) acc += sphere.weight(l) * f(a + radius * sphere.node(l, fr));
            return acc;
        };
        out.lhs1 += sphere.weight(k) * tau * tau * inner(tau);
        double ball = 0.0;
        for (int i = 0; i < rho.size(); ++i) ball += rho.weights[i] * rho.nodes[i] * rho.nodes[i] * inner(rho.nodes[i]);
        out.lhs2 += sphere.weight(k) * ball;
    }
    return out;
}

double cap_height(double s, double tau) {
    if (!(s > 0.0)) return 0.0;
    const double h = (tau * tau - (1.0 - s) * (1.0 - s)) / (2.0 * s);
    return std::clamp(h, 0.0, 2.0);
}

StabilityConfig StabilityConfig::from_json(const std::string& text) {
    StabilityConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        c.source_polar = j.value("source_polar", c.source_polar);
        c.source_azimuth = j.value("source_azimuth", c.source_azimuth);
        c.n_tau = j.value("n_tau", c.n_tau);
        c.seed = j.value("seed", c.seed);
        c.noise_degree = j.value("noise_degree", c.noise_degree);
        if (j.contains("inverse")) c.inverse = InverseConfig::from_json(j.at("inverse").dump());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("stability config: ") + e.what());
    }
    if (c.source_polar < 1 || c.source_azimuth < 2 || c.source_azimuth % 2 != 0)
        throw ConfigError("stability config: source grid must have polar >= 1 and an even azimuth >= 2");
    if (c.n_tau < 6) throw ConfigError("stability config: n_tau must be at least 6");
    if (c.noise_degree < 0) throw ConfigError("stability config: noise_degree must be nonnegative");
    return c;
}

std::string StabilityConfig::to_json() const {
    nlohmann::ordered_json j;
    j["source_polar"] = source_polar;
    j["source_azimuth"] = source_azimuth;
    j["n_tau"] = n_tau;
    j["seed"] = seed;
    j["noise_degree"] = noise_degree;
    j["inverse"] = nlohmann::ordered_json::parse(inverse.to_json());
    return j.dump(2);
}

std::string StabilityReport::to_json() const {
    nlohmann::ordered_json j;
    j["noise"] = noise;
    j["lambda"] = lambda;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : shells) arr.push_back({{"r", s.r}, {"err", s.err}, {"noise_err", s.noise_err}, {"flagged", s.flagged}});
    j["shell_errors"] = arr;
    nlohmann::ordered_json f;
    f["kind"] = fit.kind;
    f["degenerate"] = fit.degenerate;
    if (fit.kind == "holder") {
        f["alpha_hat"] = fit.alpha_hat;
        f["log_C"] = fit.log_C;
    } else {
        f["c_hat"] = fit.c_hat;
        f["envelope_holds"] = fit.envelope_holds;
    }
    f["residual"] = fit.residual;
    f["shells_used"] = fit.shells_used;
    j["fit"] = f;
    j["full_domain"] = {{"err", full_err},
                        {"D_hat", D_hat},
                        {"log_bound_check", {{"bound", log_bound}, {"holds", log_bound_holds}}}};
    j["any_flagged"] = any_flagged;
    return j.dump(2);
}

std::vector<double> noise_pattern(int n_polar, int n_azimuth, int degree, std::uint64_t seed) {
    const SphereGrid src(n_polar, n_azimuth);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-0.5, 0.5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> c(static_cast<std::size_t>(degree));
    std::vector<Vec3> v(static_cast<std::size_t>(degree));
    for (int k = 0; k < degree; ++k) {
        c[k] = coef(rng);
        v[k] = normalized(Vec3{gauss(rng), gauss(rng), gauss(rng)});
    }
    std::vector<double> y(src.size());
    double norm2 = 0.0;
    for (int s = 0; s < src.size(); ++s) {
        const Vec3 a = src.node(s);
        double val = 1.0;
        for (int k = 0; k < degree; ++k) val += c[k] * std::pow(dot(a, v[k]), k + 1);
        y[s] = val;
        norm2 += src.weight(s) * val * val;
    }
    for (double& val : y) val /= std::sqrt(norm2);
    return y;
}

namespace {

struct ShellNorms {
    std::vector<double> r;
    std::vector<std::vector<double>> q;  // per shell: one value or one per source node
};

ShellNorms shells_of(const ReconstructionState& st) {
    ShellNorms s;
    for (const auto& sh : st.shells) {
        s.r.push_back(sh.r);
        s.q.push_back(sh.q_hat);
    }
    return s;
}

// ||a - b||_{L2(|x|=r)} where b may be the true potential sampled on the same nodes.
double shell_norm(const std::vector<double>& diff, double r, const SphereGrid& src) {
    if (diff.size() == 1) return std::sqrt(4.0 * kPi) * r * std::abs(diff[0]);
    double acc = 0.0;
    for (int s = 0; s < src.size(); ++s) acc += src.weight(s) * diff[s] * diff[s];
    return r * std::sqrt(acc);
}

std::vector<double> truth_on_shell(const Potential& q, double r, bool radial, const SphereGrid& src) {
    if (radial) return {q.is_radial() ? q.profile(r) : q(Vec3{0, 0, r})};
    std::vector<double> v(src.size());
    for (int s = 0; s < src.size(); ++s) v[s] = q(r * src.node(s));
    return v;
}

void fit_report(StabilityReport& rep, bool radial, double M) {
    StabilityFit& f = rep.fit;
    f.kind = radial ? "holder" : "exp_r4";
    std::vector<double> xs, ys;
    for (const auto& s : rep.shells) {
        if (s.flagged || !(s.err > 0.0) || !(s.r > 0.0)) continue;
        if (radial) {
            xs.push_back(std::log(s.r));
            ys.push_back(std::log(s.err));
        } else {
            xs.push_back(1.0 / std::pow(s.r, 4));
            ys.push_back(std::log(s.err / rep.lambda));
        }
    }
    f.shells_used = static_cast<int>(xs.size());
    const bool have_lambda = rep.lambda > 0.0;
    if (xs.size() < 2 || !have_lambda) {
        f.degenerate = true;
    } else if (radial) {
        const double n = static_cast<double>(xs.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        const double den = n * sxx - sx * sx;
        f.degenerate = !(std::abs(den) > 1e-300);
        if (!f.degenerate) {
            const double slope = (n * sxy - sx * sy) / den;
            const double intercept = (sy - slope * sx) / n;
            f.alpha_hat = slope;
            f.log_C = intercept - std::log(rep.lambda);
            double res = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) res += std::pow(ys[i] - intercept - slope * xs[i], 2);
            f.residual = std::sqrt(res / n);
        }
    } else {
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        f.degenerate = false;
        f.c_hat = sxy / sxx;
        double res = 0.0;
        f.envelope_holds = true;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            res += std::pow(ys[i] - f.c_hat * xs[i], 2);
            if (ys[i] > f.c_hat * xs[i]) f.envelope_holds = false;
        }
        f.residual = std::sqrt(res / static_cast<double>(xs.size()));
    }

    // full-domain error over the reconstructed annulus: trapezoid in r of the squared shell norms
    double acc = 0.0;
    for (std::size_t i = 1; i < rep.shells.size(); ++i) {
        const auto& a = rep.shells[i - 1];
        const auto& b = rep.shells[i];
        acc += 0.5 * (a.r - b.r) * (a.err * a.err + b.err * b.err);
    }
    rep.full_err = std::sqrt(acc);

    if (!have_lambda) return;
    if (radial) {
        if (!f.degenerate) rep.D_hat = rep.full_err / std::pow(rep.lambda, 1.0 / (1.0 + f.alpha_hat));
    } else if (rep.lambda < std::exp(-1.0)) {
        rep.D_hat = rep.full_err * std::pow(std::log(1.0 / rep.lambda), 0.25);
    } else {
        rep.D_hat = rep.full_err / rep.lambda;
    }
    if (!radial && f.c_hat > 0.0) {
        const ExponentialOptimum o = optimise_exponential(2.0 * std::sqrt(4.0 * kPi) * M, f.c_hat, rep.lambda);
        rep.log_bound = o.bound;
        rep.log_bound_holds = rep.full_err <= o.bound;
    }
}

}  // namespace

std::vector<StabilityReport> stability_sweep(const Potential& q_true, const std::vector<double>& noises,
                                             const StabilityConfig& config) {
    for (double d : noises)
        if (!(d >= 0.0)) throw ConfigError("stability: noise levels must be nonnegative");
    InverseConfig icfg = config.inverse;
    // a radial potential is reconstructed in the radial class; the angular part of the noise is projected out
    if (icfg.symmetry == "auto") icfg.symmetry = q_true.is_radial() ? "radial" : "general";
    const bool radial = icfg.symmetry == "radial";

    const BackscatterData clean =
        sample_backscatter(q_true, config.source_polar, config.source_azimuth, uniform_taus(config.n_tau), config.forward);
    const ReconstructionState base = layer_strip_reconstruct(clean, std::nullopt, icfg);
    const ShellNorms base_shells = shells_of(base);
    const SphereGrid src = clean.sources();
    const std::vector<double> pattern =
        noise_pattern(config.source_polar, config.source_azimuth, config.noise_degree, config.seed);

    std::vector<StabilityReport> out;
    for (double delta : noises) {
        StabilityReport rep;
        rep.noise = delta;
        BackscatterData noisy = clean;
        const std::size_t nt = noisy.taus.size();
        for (std::size_t s = 0; s < noisy.n_sources(); ++s)
            for (std::size_t k = 0; k < nt; ++k) noisy.dtau[s * nt + k] += delta * pattern[s];
        rep.lambda = measurement_norm(noisy, clean);
        ReconstructionState st = base;
        if (delta > 0.0) {
            InverseConfig c = icfg;
            c.noise_floor = std::max(c.noise_floor, delta);
            st = layer_strip_reconstruct(noisy, std::nullopt, c);
        }
        for (std::size_t i = 0; i < st.shells.size(); ++i) {
            const ShellResult& sh = st.shells[i];
            ShellError e;
            e.r = sh.r;
            e.flagged = sh.flagged;
            const auto truth = truth_on_shell(q_true, sh.r, radial, src);
            std::vector<double> d1(sh.q_hat.size()), d0(sh.q_hat.size());
            for (std::size_t k = 0; k < sh.q_hat.size(); ++k) {
                d1[k] = sh.q_hat[k] - truth[k];
                d0[k] = sh.q_hat[k] - base_shells.q[i][k];
            }
            e.err = shell_norm(d1, sh.r, src);
            e.noise_err = shell_norm(d0, sh.r, src);
            rep.any_flagged = rep.any_flagged || e.flagged;
            rep.shells.push_back(e);
        }
        fit_report(rep, radial, q_true.bound());
        out.push_back(std::move(rep));
    }
    return out;
}

StabilityReport stability_experiment(const Potential& q_true, double noise, const StabilityConfig& config) {
    return stability_sweep(q_true, {noise}, config).front();
}

void write_sweep_csv(const std::vector<StabilityReport>& reports, std::ostream& out) {
    out << "noise,lambda,r,err,noise_err,flagged\n";
    char buf[256];
    for (const auto& rep : reports)
        for (const auto& s : rep.shells) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", rep.noise, rep.lambda, s.r, s.err,
                          s.noise_err, s.flagged ? 1 : 0);
            out << buf;
        }
}

}  // namespace pointscat
