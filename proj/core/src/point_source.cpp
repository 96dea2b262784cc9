#include "pointscat/point_source.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <istream>
#include <json.hpp>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pointscat/error.hpp"

namespace pointscat {

namespace {

constexpr double kInv8Pi = 1.0 / (8.0 * std::numbers::pi);

double lagrange_cubic(const double* row, int n, double u) {
    const int base = std::clamp(static_cast<int>(std::floor(u)) - 1, 0, n - 4);
    const double x = u - base;
    const double w0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
    const double w1 = x * (x - 2.0) * (x - 3.0) / 2.0;
    const double w2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
    const double w3 = x * (x - 1.0) * (x - 2.0) / 6.0;
    return w0 * row[base] + w1 * row[base + 1] + w2 * row[base + 2] + w3 * row[base + 3];
}

}  // namespace

ConeTrace cone_data_from_potential(const Potential& q, const Vec3& a) {
    if (q.is_zero()) return ConeTrace{a, [](const Vec3&) { return 0.0; }};
    const double R = q.support_radius();
    return ConeTrace{a, [q, a, R](const Vec3& x) {
                         const Vec3 d = x - a;
                         // restrict to the part of the segment that meets the support ball
                         const double dd = dot(d, d);
                         if (dd == 0.0) return q(a) * kInv8Pi;
                         const double b = dot(a, d) / dd;
                         const double c = (dot(a, a) - R * R) / dd;
                         const double disc = b * b - c;
                         if (disc <= 0.0) return 0.0;
                         const double s0 = std::max(0.0, -b - std::sqrt(disc));
                         const double s1 = std::min(1.0, -b + std::sqrt(disc));
                         if (s1 <= s0) return 0.0;
                         auto f = [&](double s) { return q(a + s * d); };
                         const double v =
                             boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, s0, s1, 12, 1e-13);
                         return v * kInv8Pi;
                     }};
}

double PointSourceSolution::backscatter(double tau) const {
    const ApexGrid& G = *regular.grid;
    const double* row = regular.u.row(0);
    const int n = G.last_sigma(0) + 1;
    return lagrange_cubic(row, n, 2.0 * tau / G.d_sigma());
}

PointSourceSolution solve_point_source(const Potential& q, const Vec3& a, const PointSourceOptions& options) {
    if (std::abs(norm(a) - 1.0) > 1e-12) throw std::invalid_argument("solve_point_source: source must lie on the unit sphere");
    PointSourceSolution sol;
    sol.a = a;
    sol.q = q;
    sol.g = cone_data_from_potential(q, a);

    GoursatOptions go;
    go.grid = options.grid;
    go.symmetry = q.is_radial() ? FieldSymmetry::axial : FieldSymmetry::general;
    go.frame = Frame::along(-1.0 * a);
    go.m = options.m;
    go.M = options.M;
    go.tolerance = options.tolerance;
    go.quadrature = options.quadrature;
    go.threads = options.threads;
    if (options.restrict_to_support) {
        const GridSpec& s = options.grid;
        const double d_rho = s.horizon / (2.0 * s.radial);
        const double R = q.support_radius();
        const double arc = 2.0 * std::numbers::pi / std::min(s.polar, s.azimuth);
        // reach of the interpolation stencils: two shells radially, one ring spacing angularly
        go.active = [a, R, d_rho, arc](const Vec3& x) {
            const double rho = norm(x - a);
            return norm(x) <= R + 2.0 * d_rho + rho * arc;
        };
    }
    ScalarField qf = q.field();
    sol.regular = goursat_solve(qf, q.bound(), sol.g, go);
    return sol;
}

double transport_residual(const PointSourceSolution& sol, double step, int n_radii) {
    const GoursatSolution& u = sol.regular;
    const ApexGrid& G = *u.grid;
    const Vec3& a = sol.a;
    double worst = 0.0;
    for (int k = 0; k < n_radii; ++k) {
        const double r = 0.05 + 0.9 * k / std::max(1, n_radii - 1);
        for (int d = 0; d < G.n_dir(); ++d) {
            const Vec3 e = G.direction(d);
            const Vec3 x = a + r * e;
            const double u0 = u.value(x, r);
            const double ut = (-3.0 * u0 + 4.0 * u.value(x, r + step) - u.value(x, r + 2.0 * step)) / (2.0 * step);
            const double ur =
                (3.0 * u0 - 4.0 * u.value(x - step * e, r) + u.value(x - 2.0 * step * e, r)) / (2.0 * step);
            const double lhs = r * ut + u0 + r * ur;
            worst = std::max(worst, std::abs(lhs - sol.q(x) * kInv8Pi));
        }
    }
    return worst;
}

BackscatterData BackscatterData::zero(int n_polar, int n_azimuth, std::vector<double> taus) {
    BackscatterData d;
    d.n_polar = n_polar;
    d.n_azimuth = n_azimuth;
    d.taus = std::move(taus);
    d.values.assign(d.n_sources() * d.taus.size(), 0.0);
    d.dtau.assign(d.values.size(), 0.0);
    return d;
}

std::vector<double> uniform_taus(int n) {
    std::vector<double> t;
    for (int k = 1; k < n; ++k) t.push_back(static_cast<double>(k) / n);
    return t;
}

void fill_derivative_channel(BackscatterData& d) {
    const std::size_t n = d.taus.size();
    d.dtau.assign(d.values.size(), 0.0);
    if (n < 5) throw std::invalid_argument("fill_derivative_channel: need at least five tau samples");
    const double h = d.taus[1] - d.taus[0];
    for (std::size_t s = 0; s < d.n_sources(); ++s) {
        auto f = [&](std::size_t k) { return d.taus[k] * d.value(s, k); };
        double* out = d.dtau.data() + s * n;
        for (std::size_t k = 0; k < n; ++k) {
            double v;
            if (k >= 2 && k + 2 < n) {
                v = (f(k - 2) - 8.0 * f(k - 1) + 8.0 * f(k + 1) - f(k + 2)) / (12.0 * h);
            } else if (k < 2) {
                const double o = k == 0 ? 0.0 : 1.0;  // offset of k from the first node
                // five-point one-sided weights at x = o on nodes 0..4
                const double c[2][5] = {{-25.0, 48.0, -36.0, 16.0, -3.0}, {-3.0, -10.0, 18.0, -6.0, 1.0}};
                v = 0.0;
                for (int j = 0; j < 5; ++j) v += c[static_cast<int>(o)][j] * f(j);
                v /= 12.0 * h;
            } else {
                const std::size_t b = n - 5;
                const int o = static_cast<int>(k - b);  // 3 or 4
                const double c[2][5] = {{-1.0, 6.0, -18.0, 10.0, 3.0}, {3.0, -16.0, 36.0, -48.0, 25.0}};
                v = 0.0;
                for (int j = 0; j < 5; ++j) v += c[o - 3][j] * f(b + j);
                v /= 12.0 * h;
            }
            out[k] = v;
        }
    }
}

BackscatterData sample_backscatter(const Potential& q, int n_polar, int n_azimuth, const std::vector<double>& taus,
                                   const PointSourceOptions& options) {
    for (double t : taus)
        if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("sample_backscatter: tau outside (0,1)");
    BackscatterData d = BackscatterData::zero(n_polar, n_azimuth, taus);
    if (q.is_zero()) return d;
    const SphereGrid src = d.sources();
    const std::size_t nt = taus.size();
    if (q.is_radial()) {
        const PointSourceSolution sol = solve_point_source(q, src.node(0), options);
        std::vector<double> row(nt);
        for (std::size_t k = 0; k < nt; ++k) row[k] = sol.backscatter(taus[k]);
        for (std::size_t s = 0; s < d.n_sources(); ++s) std::copy(row.begin(), row.end(), d.values.begin() + s * nt);
    } else {
        for (std::size_t s = 0; s < d.n_sources(); ++s) {
            const PointSourceSolution sol = solve_point_source(q, src.node(static_cast<int>(s)), options);
            for (std::size_t k = 0; k < nt; ++k) d.values[s * nt + k] = sol.backscatter(taus[k]);
        }
    }
    fill_derivative_channel(d);
    return d;
}

double measurement_norm(const BackscatterData& d1, const BackscatterData& d2) {
    if (d1.n_polar != d2.n_polar || d1.n_azimuth != d2.n_azimuth || d1.taus != d2.taus)
        throw std::invalid_argument("measurement_norm: data grids do not match");
    const SphereGrid src = d1.sources();
    double worst = 0.0;
    for (std::size_t k = 0; k < d1.taus.size(); ++k) {
        double acc = 0.0;
        for (std::size_t s = 0; s < d1.n_sources(); ++s) {
            const double diff = d1.derivative(s, k) - d2.derivative(s, k);
            acc += src.weight(static_cast<int>(s)) * diff * diff;
        }
        worst = std::max(worst, acc);
    }
    return std::sqrt(worst);
}

void write_backscatter_csv(const BackscatterData& d, std::ostream& out) {
    const SphereGrid src = d.sources();
    out << "a_polar,a_azimuth,tau,value,dtau_tau_value\n";
    char buf[200];
    for (int i = 0; i < d.n_polar; ++i)
        for (int j = 0; j < d.n_azimuth; ++j) {
            const std::size_t s = static_cast<std::size_t>(src.index(i, j));
            for (std::size_t k = 0; k < d.taus.size(); ++k) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", src.polar(i), src.azimuth(j),
                              d.taus[k], d.value(s, k), d.derivative(s, k));
                out << buf;
            }
        }
}

BackscatterData read_backscatter_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("a_polar,a_azimuth,tau,value,dtau_tau_value", 0) != 0)
        throw ConfigError("backscatter CSV: missing or wrong header");
    struct Row {
        double polar, azimuth, tau, value, dtau;
    };
    std::vector<Row> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Row r{};
        char tail = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf%c", &r.polar, &r.azimuth, &r.tau, &r.value, &r.dtau,
                        &tail) != 5)
            throw ConfigError("backscatter CSV: malformed line " + std::to_string(lineno));
        rows.push_back(r);
    }
    if (rows.empty()) throw ConfigError("backscatter CSV: no data rows");
    // layout: polar-major, then azimuth, then tau
    std::vector<double> taus;
    for (const Row& r : rows) {
        if (!taus.empty() && r.tau <= taus.back()) break;
        taus.push_back(r.tau);
    }
    const std::size_t nt = taus.size();
    if (rows.size() % nt != 0) throw ConfigError("backscatter CSV: truncated (row count not a multiple of the tau grid)");
    const std::size_t ns = rows.size() / nt;
    std::vector<double> polars;
    std::size_t n_az = 0;
    for (std::size_t s = 0; s < ns; ++s) {
        const double p = rows[s * nt].polar;
        if (polars.empty() || p != polars.back()) polars.push_back(p);
    }
    if (ns % polars.size() != 0) throw ConfigError("backscatter CSV: truncated source grid");
    n_az = ns / polars.size();
    BackscatterData d = BackscatterData::zero(static_cast<int>(polars.size()), static_cast<int>(n_az), taus);
    const SphereGrid src = d.sources();
    for (std::size_t s = 0; s < ns; ++s) {
        const int i = static_cast<int>(s / n_az), j = static_cast<int>(s % n_az);
        for (std::size_t k = 0; k < nt; ++k) {
            const Row& r = rows[s * nt + k];
            if (std::abs(r.polar - src.polar(i)) > 1e-9 || std::abs(r.azimuth - src.azimuth(j)) > 1e-9 ||
                r.tau != taus[k])
                throw ConfigError("backscatter CSV: source or tau grid inconsistent at row " +
                                  std::to_string(s * nt + k + 2));
            d.values[s * nt + k] = r.value;
            d.dtau[s * nt + k] = r.dtau;
        }
    }
    return d;
}

std::string backscatter_sidecar_json(const BackscatterData& d, const PointSourceOptions& o,
                                     const std::string& potential_json) {
    nlohmann::ordered_json j;
    j["sources"] = {{"n_polar", d.n_polar}, {"n_azimuth", d.n_azimuth}};
    j["taus"] = {{"count", d.taus.size()},
                 {"first", d.taus.empty() ? 0.0 : d.taus.front()},
                 {"last", d.taus.empty() ? 0.0 : d.taus.back()}};
    j["grid"] = {{"radial", o.grid.radial},
                 {"polar", o.grid.polar},
                 {"azimuth", o.grid.azimuth},
                 {"time", o.grid.time},
                 {"horizon", o.grid.horizon}};
    j["orders"] = {{"m", o.m}, {"M", o.M}, {"tolerance", o.tolerance}};
    j["potential"] = nlohmann::ordered_json::parse(potential_json);
    return j.dump(2);
}

}  // namespace pointscat
