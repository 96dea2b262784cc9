// One PASS/FAIL line per acceptance criterion. Tolerances and budgets are pinned below.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pointscat/cli.hpp"
#include "pointscat/goursat.hpp"
#include "pointscat/inverse.hpp"
#include "pointscat/stability.hpp"

using namespace pointscat;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "!") + what;
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------- 1
constexpr double kC1Tol = 1e-3;
constexpr double kC1Budget = 120.0;

double constant_series(double z) {
    double s = 0.0, term = 1.0;
    for (int k = 0; k < 80; ++k) {
        s += term;
        term *= z / ((k + 1.0) * (k + 2.0));
    }
    return s;
}

double goursat_oracle_error(double q0, const GoursatOptions& opt, GoursatSolution* keep = nullptr) {
    const ConeTrace g{{0, 0, 0}, [](const Vec3&) { return 1.0; }};
    GoursatSolution sol = goursat_solve([q0](const Vec3&) { return q0; }, std::abs(q0), g, opt);
    const ApexGrid& G = *sol.grid;
    double worst = 0.0;
    for (int i = 0; i < G.n_rho(); ++i)
        for (int j = 0; j < G.n_sigma(); ++j) {
            if (!G.nominal(i, j)) continue;
            const double s = G.sigma(j), r = G.rho(i);
            worst = std::max(worst, rel(sol.u.at(i, 0, j), constant_series(q0 * s * (s + 2.0 * r) / 4.0)));
        }
    if (keep) *keep = std::move(sol);
    return worst;
}

std::vector<GoursatSolution> g_goursat;  // reused by criteria 4 and 5

Outcome criterion1() {
    Outcome o;
    GoursatOptions def;
    def.symmetry = FieldSymmetry::spherical;
    GoursatOptions fine = def;
    fine.grid.radial *= 2;
    fine.grid.time *= 2;
    fine.quadrature.radial_panels *= 2;
    double worst = 0.0;
    bool decreases = true;
    for (double q0 : {-2.0, -0.5, 0.5, 2.0}) {
        GoursatSolution sol;
        const double e = goursat_oracle_error(q0, def, &sol);
        const double ef = goursat_oracle_error(q0, fine);
        g_goursat.push_back(std::move(sol));
        worst = std::max(worst, e);
        decreases = decreases && ef < e;
        o.detail += (o.detail.empty() ? "" : " ") + fmt("q0=%+.1f:", q0) + fmt("%.2e", e) + fmt("->%.2e", ef);
    }
    o.pass = worst <= kC1Tol && decreases;
    o.detail += fmt("; max rel err %.2e", worst) + fmt(" (tol %.0e)", kC1Tol) +
                (decreases ? "; decreases under 2x refinement" : "; !not decreasing under refinement");
    return o;
}

// ---------------------------------------------------------------- 2
constexpr double kC2PolyTol = 1e-8;
constexpr double kC2SmoothTol = 1e-6;
constexpr double kC2Budget = 60.0;

SpaceTimeFunction on_cone(const std::function<double(double)>& p) {
    return [p](const Vec3& y, double s) {
        const double z = s * s - dot(y, y);
        return s >= 0.0 && z >= 0.0 ? p(z) : 0.0;
    };
}

std::vector<std::pair<Vec3, double>> cone_points(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::pair<Vec3, double>> pts;
    for (int k = 0; k < n; ++k) {
        const Vec3 x{0.7 * u(rng), 0.7 * u(rng), 0.7 * u(rng)};
        pts.push_back({x, norm(x) + 0.02 + 0.6 * (u(rng) + 1.0)});
    }
    return pts;
}

// p(z) = sum_k c_k cos(w_k z + f_k): entire, with random low frequencies
std::vector<std::function<double(double)>> random_profiles(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::function<double(double)>> ps;
    for (int i = 0; i < n; ++i) {
        std::vector<double> c(3), w(3), f(3);
        for (int k = 0; k < 3; ++k) {
            c[k] = u(rng);
            w[k] = 2.0 * u(rng);
            f[k] = kPi * u(rng);
        }
        ps.push_back([c, w, f](double z) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += c[k] * std::cos(w[k] * z + f[k]);
            return s;
        });
    }
    return ps;
}

Outcome criterion2() {
    Outcome o;
    const auto pts = cone_points(50, 2024);
    const std::vector<std::function<double(double)>> polys = {
        [](double) { return 1.0; }, [](double z) { return z; }, [](double z) { return z * z; }};
    double poly = 0.0, smooth = 0.0;
    for (const auto& [x, t] : pts) {
        for (const auto& p : polys)
            poly = std::max(poly, std::abs(k_apply_direct(on_cone(p), x, t).value - k_apply_lorentz(p, x, t)));
    }
    const auto profiles = random_profiles(20, 77);
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto& [x, t] = pts[i];
        smooth = std::max(smooth, std::abs(k_apply_direct(on_cone(profiles[i]), x, t).value -
                                           k_apply_lorentz(profiles[i], x, t)));
    }
    o.require(poly <= kC2PolyTol, fmt("polynomials max diff %.2e", poly) + fmt(" (tol %.0e)", kC2PolyTol));
    o.require(smooth <= kC2SmoothTol, fmt("20 random smooth p max diff %.2e", smooth) + fmt(" (tol %.0e)", kC2SmoothTol));
    return o;
}

// ---------------------------------------------------------------- 3
constexpr double kC3Tol = 1e-8;

Outcome criterion3() {
    Outcome o;
    double e1 = 0.0, e2 = 0.0;
    for (const auto& [x, t] : cone_points(50, 31)) {
        const double z = t * t - dot(x, x);
        const auto one = [](double) { return 1.0; };
        const auto lin = [](double w) { return w; };
        e1 = std::max({e1, std::abs(k_apply_direct(on_cone(one), x, t).value - z / 8.0),
                       std::abs(k_apply_lorentz(one, x, t) - z / 8.0)});
        e2 = std::max({e2, std::abs(k_apply_direct(on_cone(lin), x, t).value - z * z / 24.0),
                       std::abs(k_apply_lorentz(lin, x, t) - z * z / 24.0)});
    }
    o.require(e1 <= kC3Tol, fmt("K[1] vs z/8 %.2e", e1));
    o.require(e2 <= kC3Tol, fmt("K[gamma1] vs z^2/24 %.2e", e2));
    o.detail += fmt(" (tol %.0e)", kC3Tol);
    return o;
}

// ---------------------------------------------------------------- 5 (point-source solve shared with 4)
constexpr double kC5Tol = 1e-3;
constexpr double kC5TraceTol = 1e-12;

PotentialSpec bump_spec(double amplitude = 1.0) {
    PotentialSpec s;
    s.amplitude = amplitude;
    s.width = 0.8;
    s.margin_h = 0.2;
    return s;
}

std::vector<PointSourceSolution> g_point;

void solve_point_sources() {
    if (!g_point.empty()) return;
    // radial bumps from two source directions (axial storage); a general-symmetry solve at the
    // default point-source grid does not fit the budget on one core
    g_point.push_back(solve_point_source(Potential::from_spec(bump_spec()), Vec3{0, 0, 1}));
    PotentialSpec shell = bump_spec(-2.0);
    shell.center_radius = 0.4;
    shell.width = 0.3;
    g_point.push_back(solve_point_source(Potential::from_spec(shell), normalized(Vec3{1, 1, 1})));
}

// ---------------------------------------------------------------- 4
Outcome criterion4() {
    Outcome o;
    solve_point_sources();
    int levels = 0;
    double worst = 0.0;
    bool holds = true;
    auto scan = [&](const NeumannSolution& n) {
        holds = holds && n.growth_bound_holds();
        for (double r : n.envelope_ratios()) worst = std::max(worst, r);
        levels += n.order + 1;
    };
    for (const auto& s : g_goursat) scan(s.neumann);
    for (const auto& s : g_point) scan(s.regular.neumann);
    o.pass = holds && worst <= 1.0;
    o.detail = std::to_string(levels) + " levels over " + std::to_string(g_goursat.size() + g_point.size()) +
               " solves" + fmt("; max |w_m| / envelope %.3f (must be <= 1)", worst);
    return o;
}

Outcome criterion5() {
    Outcome o;
    solve_point_sources();
    double trace = 0.0, cone = 0.0, transport = 0.0;
    for (const auto& s : g_goursat) {
        trace = std::max(trace, s.trace_error());
        cone = std::max(cone, cone_identity_residual(s));
    }
    for (const auto& s : g_point) {
        trace = std::max(trace, s.regular.trace_error());
        cone = std::max(cone, cone_identity_residual(s.regular));
        transport = std::max(transport, transport_residual(s));
    }
    o.require(trace <= kC5TraceTol, fmt("Dirichlet trace %.1e", trace));
    o.require(cone <= kC5Tol, fmt("(d_t+d_r)u - d_r g %.2e", cone));
    o.require(transport <= kC5Tol, fmt("transport residual %.2e", transport));
    o.detail += fmt(" (tol %.0e)", kC5Tol);
    return o;
}

// ---------------------------------------------------------------- 6
constexpr double kC6Tol = 1e-2;
constexpr double kC6MinOrder = 0.8;
constexpr double kC6Budget = 600.0;

// max over tau of |lhs - rhs| / max over tau of |lhs|, for the pair (q1, q2) seen from a = e3
double boundary_defect(const PointSourceOptions& opt) {
    PotentialSpec s2 = bump_spec(0.5);
    s2.width = 0.6;
    const auto a = Vec3{0, 0, 1};
    const auto u1 = solve_point_source(Potential::from_spec(bump_spec()), a, opt);
    const auto u2 = solve_point_source(Potential::from_spec(s2), a, opt);
    double defect = 0.0, scale = 0.0;
    for (double tau : {0.3, 0.5, 0.7, 0.9}) {
        const auto b = boundary_identity_check(u1, &u2, tau);
        defect = std::max(defect, b.defect());
        scale = std::max(scale, std::abs(b.lhs));
    }
    return defect / scale;
}

Outcome criterion6() {
    Outcome o;
    // refinement halves the radial, retarded-time and kernel-panel steps together
    PointSourceOptions def;
    PointSourceOptions coarse = def, fine = def;
    coarse.grid.radial /= 2;
    coarse.grid.time /= 2;
    coarse.quadrature.radial_panels /= 2;
    fine.grid.radial *= 2;
    fine.grid.time *= 2;
    fine.quadrature.radial_panels *= 2;
    const double ec = boundary_defect(coarse), ed = boundary_defect(def), ef = boundary_defect(fine);
    const double order = std::log2(ec / ef) / 2.0;
    o.require(ed <= kC6Tol, fmt("relative defect at default %.2e", ed) + fmt(" (tol %.0e)", kC6Tol));
    o.require(ec > ed && ed > ef, fmt("coarse %.2e", ec) + fmt(" > default %.2e", ed) + fmt(" > fine %.2e", ef));
    o.require(order >= kC6MinOrder, fmt("observed order %.2f", order) + fmt(" (>= %.1f)", kC6MinOrder));
    return o;
}

// ---------------------------------------------------------------- 7
constexpr double kC7Tol = 1e-5;
// absolute slack on |E| in the angular bound, relative to sup|Q|: near the support edge Q is 1e-14
// and the tau-difference of its spherical mean is pure truncation error
constexpr double kC7BoundSlack = 1e-10;

std::vector<std::pair<Vec3, double>> boundary_samples(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.35, 0.9);
    std::vector<std::pair<Vec3, double>> s;
    for (int k = 0; k < n; ++k) s.push_back({normalized(Vec3{g(rng), g(rng), g(rng)}), u(rng)});
    return s;
}

Outcome criterion7() {
    Outcome o;
    PotentialSpec spec;
    spec.width = 0.6;
    const Potential radial = Potential::from_spec(spec);
    spec.kind = "angular_bump";
    const Potential angular = Potential::from_spec(spec);
    double e_max = 0.0, worst_ratio = 0.0;
    int held = 0;
    const auto samples = boundary_samples(20, 5);
    for (const auto& [a, tau] : samples) {
        e_max = std::max(e_max, std::abs(spherical_mean_derivative(radial.field(), a, tau).error_term));
        const auto m = spherical_mean_derivative(angular.field(), a, tau, 32);
        const double slack = kC7BoundSlack * angular.bound();
        held += m.bound_holds(slack) ? 1 : 0;
        const double e = std::max(0.0, std::abs(m.error_term) - slack);
        if (m.bound > 0.0) worst_ratio = std::max(worst_ratio, e * e / m.bound);
    }
    o.require(e_max <= kC7Tol, fmt("radial max |E| %.2e", e_max) + fmt(" (tol %.0e)", kC7Tol));
    o.require(held == static_cast<int>(samples.size()),
              "angular |E|^2 bound held at " + std::to_string(held) + "/" + std::to_string(samples.size()) +
                  fmt(" samples, max |E|^2/bound %.3f", worst_ratio) +
                  fmt(" (slack %.0e sup|Q|)", kC7BoundSlack));
    return o;
}

// ---------------------------------------------------------------- 8
constexpr double kC8Tol = 0.05;
constexpr double kC8Budget = 900.0;

Outcome criterion8() {
    Outcome o;
    const Potential q = Potential::from_spec(bump_spec());
    StabilityConfig cfg;
    cfg.inverse.margin_h = 0.2;
    cfg.inverse.fixpoint_max = 1;
    cfg.inverse.shells = 48;  // r down to 0.5
    const std::vector<double> noises{0.0, 1e-4, 1e-3, 1e-2};
    const auto reps = stability_sweep(q, noises, cfg);

    // noiseless round trip: relative L2 over the shells r >= 0.5
    double num = 0.0, den = 0.0;
    for (const auto& s : reps[0].shells) {
        if (s.r < 0.5) continue;
        const double ref = std::sqrt(4.0 * kPi) * s.r * q.profile(s.r);
        num += s.err * s.err;
        den += ref * ref;
    }
    const double rt = std::sqrt(num / den);
    o.require(rt <= kC8Tol && !reps[0].any_flagged, fmt("roundtrip rel L2 (r>=0.5) %.2e", rt) + fmt(" (tol %.0e)", kC8Tol));

    // shell error nondecreasing as r decreases: least-squares slope of log err against log r must be <= 0,
    // over the shells inside 1 - h (q_hat is pinned to 0 beyond)
    for (std::size_t k = 1; k < reps.size(); ++k) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        double inner = 0.0, outer = 0.0;
        for (const auto& s : reps[k].shells) {
            if (s.r >= 1.0 - q.margin() || !(s.err > 0.0)) continue;
            const double x = std::log(s.r), y = std::log(s.err);
            sx += x, sy += y, sxx += x * x, sxy += x * y, ++n;
            if (outer == 0.0) outer = s.err;
            inner = s.err;
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        o.require(slope <= 0.0, fmt("delta=%.0e: d log err / d log r ", noises[k]) + fmt("%+.3f", slope) +
                                    fmt(" (err %.3e at outer shell", outer) + fmt(", %.3e at inner)", inner));
    }
    bool dec = true;
    std::string full;
    for (std::size_t k = reps.size() - 1; k >= 1; --k) {
        full += fmt(full.empty() ? "%.2e" : " > %.2e", reps[k].full_err);
        if (k + 1 < reps.size()) dec = dec && reps[k].full_err < reps[k + 1].full_err;
    }
    o.require(dec, "full-domain error " + full + " as delta decreases");
    return o;
}

// ---------------------------------------------------------------- 9
constexpr double kC9IdTol = 1e-4;
constexpr double kC9InnerTol = 1e-6;
constexpr double kC9OptTol = 1e-12;
constexpr int kC9Resolution = 48;  // at 32 the steeper field reaches 1.8e-4 at tau = 0.8

Outcome criterion9() {
    Outcome o;
    double id = 0.0;
    const std::vector<ScalarField> fields = {
        [](const Vec3& x) { return bump_profile(norm(x - Vec3{0.1, -0.2, 0.15}) / 0.6); },
        [](const Vec3& x) { return (1.0 + 0.5 * x.x) * bump_profile(norm(x) / 0.85); }};
    for (const auto& f : fields)
        for (double tau : {0.25, 0.5, 0.8}) {
            const auto c = coords_identity_check(f, tau, kC9Resolution);
            id = std::max({id, rel(c.lhs1, c.rhs1), rel(c.lhs2, c.rhs2)});
        }
    o.require(id <= kC9IdTol, fmt("change-of-coordinates identities rel %.2e", id) + fmt(" (tol %.0e)", kC9IdTol));

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double inner_err = 0.0, inner_max = 0.0;
    for (int k = 0; k < 64; ++k) {
        const double s0 = u(rng), tau = s0 + 1e-3 + u(rng);
        const double v = inner_kernel_integral(s0, tau);
        inner_err = std::max(inner_err, std::abs(v - kPi));
        inner_max = std::max(inner_max, v);
    }
    o.require(inner_err <= kC9InnerTol && inner_max <= 4.0,
              fmt("inner kernel |I - pi| %.2e", inner_err) + fmt(", max I %.6f <= 4", inner_max));

    // branch formulas against direct substitution of ell0 into A ell + Lambda exp(c / ell^4)
    double opt = 0.0;
    bool covers = true;
    for (double A : {0.0, 0.3, 2.0})
        for (double c : {0.05, 1.0, 3.0})
            for (double L : {1e-10, 1e-4, 0.1, 0.3, 0.5, 1.0, 4.0}) {
                const auto r = optimise_exponential(A, c, L);
                const double env = exponential_envelope(A, c, L, r.ell0);
                double ell, direct, formula;
                if (L < std::exp(-1.0)) {
                    ell = std::pow(c / std::log(1.0 / std::sqrt(L)), 0.25);
                    direct = A * ell + std::sqrt(L);  // Lambda exp(c/ell^4) = sqrt(Lambda)
                    formula = (A * std::pow(2.0 * c, 0.25) + 2.0) / std::pow(std::log(1.0 / L), 0.25);
                    covers = covers && r.small_lambda;
                } else {
                    ell = std::pow(c, 0.25);
                    direct = A * ell + std::exp(1.0) * L;
                    formula = (A * std::pow(c, 0.25) + 1.0) * std::exp(1.0) * L;
                    covers = covers && !r.small_lambda;
                }
                opt = std::max({opt, rel(r.ell0, ell), rel(env, direct), rel(r.bound, formula)});
                covers = covers && env <= r.bound * (1.0 + kC9OptTol);
            }
    o.require(opt <= kC9OptTol && covers, fmt("optimise_exponential vs substitution %.1e", opt) +
                                              fmt(" (tol %.0e)", kC9OptTol) + (covers ? ", bound covers" : ", !bound"));
    return o;
}

// ---------------------------------------------------------------- 10
std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "pointscat");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

Outcome criterion10() {
    Outcome o;
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "pointscat_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    // general (angular) potential on a reduced grid: 13 shells reach r = 0.46, inside the support
    const std::string cfg = R"({
  "potential": {"kind": "angular_bump", "amplitude": 1.0, "width": 0.5, "margin_h": 0.3},
  "forward": {"grid": {"radial": 12, "time": 24, "polar": 8, "azimuth": 16, "kernel_panels": 6}},
  "sources": {"polar": 2, "azimuth": 2},
  "n_tau": 24,
  "inverse": {"shells": 13, "margin_h": 0.3, "symmetry": "general"},
  "stability": {"noise": [1e-3]},
  "seed": 42
})";
    std::ofstream(root / "config.json") << cfg;
    const std::string c = (root / "config.json").string();
    const std::vector<std::string> files = {"backscatter.csv", "backscatter.json", "reconstruction.csv",
                                            "reconstruction.json", "stability.json", "stability_sweep.csv"};
    std::vector<std::string> first;
    bool same = true, ran = true;
    for (int threads : {1, 2, 4}) {
        const fs::path d = root / ("t" + std::to_string(threads));
        const std::string t = std::to_string(threads);
        ran = ran && run_cli({"forward", "--config", c, "--out", d.string(), "--threads", t}) == cli::kOk;
        ran = ran && run_cli({"invert", "--config", c, "--data", (d / "backscatter.csv").string(), "--out", d.string(),
                              "--threads", t}) == cli::kOk;
        ran = ran && run_cli({"stability", "--config", c, "--out", d.string(), "--threads", t}) == cli::kOk;
        std::vector<std::string> now;
        for (const auto& f : files) now.push_back(read_file(d / f));
        if (first.empty()) first = now;
        else same = same && now == first;
    }
    o.require(ran, "forward/invert/stability ran");
    o.require(same, std::to_string(files.size()) + " output files byte-identical for 1, 2 and 4 threads (seed 42)");
    fs::remove_all(root);
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double budget;  // seconds; exceeding it fails the criterion
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> all = {
        {1, "constant-potential Goursat oracle", kC1Budget, criterion1},
        {2, "K direct vs Lorentz form", kC2Budget, criterion2},
        {3, "closed-form K values", 60.0, criterion3},
        {4, "Neumann level envelope", 300.0, criterion4},
        {5, "cone identities", 300.0, criterion5},
        {6, "boundary identity, radial pair", kC6Budget, criterion6},
        {7, "spherical-mean derivative error", 120.0, criterion7},
        {8, "roundtrip reconstruction and noise sweep", kC8Budget, criterion8},
        {9, "change of coordinates, Gronwall kernel, exponential optimum", 180.0, criterion9},
        {10, "determinism across thread counts", 600.0, criterion10},
    };
    int failed = 0;
    for (const auto& c : all) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        const bool in_budget = secs <= c.budget;
        const bool pass = o.pass && in_budget;
        failed += pass ? 0 : 1;
        std::printf("%s criterion %d (%s): %s; %.1fs of %.0fs budget%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget, in_budget ? "" : " (!over budget)");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
