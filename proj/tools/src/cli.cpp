#include "pointscat/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "pointscat/error.hpp"
#include "pointscat/suites.hpp"

namespace pointscat::cli {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void read_grid(const json& g, PointSourceOptions& o) {
    o.grid.radial = g.value("radial", o.grid.radial);
    o.grid.polar = g.value("polar", o.grid.polar);
    o.grid.azimuth = g.value("azimuth", o.grid.azimuth);
    o.grid.time = g.value("time", o.grid.time);
    o.quadrature.polar = g.value("kernel_polar", o.grid.polar);
    o.quadrature.azimuth = g.value("kernel_azimuth", o.grid.azimuth);
    o.quadrature.radial_panels = g.value("kernel_panels", o.quadrature.radial_panels);
}

ordered_json grid_json(const PointSourceOptions& o) {
    return {{"radial", o.grid.radial},           {"polar", o.grid.polar},
            {"azimuth", o.grid.azimuth},         {"time", o.grid.time},
            {"kernel_polar", o.quadrature.polar}, {"kernel_azimuth", o.quadrature.azimuth},
            {"kernel_panels", o.quadrature.radial_panels}};
}

void validate(const PointSourceOptions& o, const char* where) {
    const auto& g = o.grid;
    if (g.radial < 2 || g.polar < 2 || g.azimuth < 2 || g.time < 2 || g.azimuth % 2 != 0)
        throw ConfigError(std::string(where) + ": grid orders must be at least 2 (azimuth even)");
    if (o.quadrature.polar < 1 || o.quadrature.azimuth < 1 || o.quadrature.radial_panels < 1)
        throw ConfigError(std::string(where) + ": kernel quadrature orders must be positive");
    if (o.m < 0) throw ConfigError(std::string(where) + ": m must be nonnegative");
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << text;
}

std::filesystem::path out_dir(const RunConfig& c) {
    std::filesystem::path d(c.out);
    std::error_code ec;
    std::filesystem::create_directories(d, ec);
    if (ec) throw ConfigError("cannot create output directory " + c.out + ": " + ec.message());
    return d;
}

PointSourceOptions forward_options(const RunConfig& c) {
    PointSourceOptions o = c.forward;
    o.threads = c.threads;
    return o;
}

const PotentialSpec& require_potential(const RunConfig& c, const char* cmd) {
    if (!c.potential) throw ConfigError(std::string(cmd) + ": config has no potential section");
    return *c.potential;
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
    RunConfig c;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    try {
        if (j.contains("potential")) {
            json p = json::parse(PotentialSpec{}.to_json());
            p.update(j.at("potential"));
            c.potential = PotentialSpec::from_json(p.dump());
            (void)Potential::from_spec(*c.potential);  // range checks
        }
        if (j.contains("forward")) {
            const auto& f = j.at("forward");
            c.forward.m = f.value("m", c.forward.m);
            c.forward.M = f.value("M", c.forward.M);
            c.forward.tolerance = f.value("tolerance", c.forward.tolerance);
            if (f.contains("grid")) read_grid(f.at("grid"), c.forward);
        }
        if (j.contains("sources")) {
            c.source_polar = j.at("sources").value("polar", c.source_polar);
            c.source_azimuth = j.at("sources").value("azimuth", c.source_azimuth);
        }
        c.n_tau = j.value("n_tau", c.n_tau);
        if (j.contains("inverse")) {
            const auto& inv = j.at("inverse");
            c.inverse = InverseConfig::from_json(inv.dump());
            if (!inv.contains("grid")) {
                c.inverse.forward.grid = c.forward.grid;
                c.inverse.forward.quadrature = c.forward.quadrature;
            }
            if (!inv.contains("m")) c.inverse.forward.m = c.forward.m;
            if (!inv.contains("M")) c.inverse.forward.M = c.forward.M;
        } else {
            c.inverse.forward = c.forward;
        }
        if (j.contains("stability")) {
            const auto& s = j.at("stability");
            if (s.contains("noise")) c.noise = s.at("noise").get<std::vector<double>>();
            c.noise_degree = s.value("noise_degree", c.noise_degree);
        }
        c.data = j.value("data", c.data);
        c.out = j.value("out", c.out);
        c.seed = j.value("seed", c.seed);
        c.threads = j.value("threads", c.threads);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    validate(c.forward, "forward");
    validate(c.inverse.forward, "inverse");
    if (c.source_polar < 1 || c.source_azimuth < 2 || c.source_azimuth % 2 != 0)
        throw ConfigError("config: sources need polar >= 1 and an even azimuth >= 2");
    if (c.n_tau < 6) throw ConfigError("config: n_tau must be at least 6");
    if (c.threads < 1) throw ConfigError("config: threads must be positive");
    for (double d : c.noise)
        if (!(d >= 0.0)) throw ConfigError("config: noise levels must be nonnegative");
    return c;
}

std::string RunConfig::to_json() const {
    ordered_json j;
    if (potential) j["potential"] = ordered_json::parse(potential->to_json());
    j["forward"] = {{"m", forward.m}, {"M", forward.M}, {"tolerance", forward.tolerance}, {"grid", grid_json(forward)}};
    j["sources"] = {{"polar", source_polar}, {"azimuth", source_azimuth}};
    j["n_tau"] = n_tau;
    j["inverse"] = ordered_json::parse(inverse.to_json());
    j["stability"] = {{"noise", noise}, {"noise_degree", noise_degree}};
    j["data"] = data;
    j["out"] = out;
    j["seed"] = seed;
    j["threads"] = threads;
    return j.dump(2);
}

StabilityConfig RunConfig::stability() const {
    StabilityConfig s;
    s.source_polar = source_polar;
    s.source_azimuth = source_azimuth;
    s.n_tau = n_tau;
    s.forward = forward_options(*this);
    s.inverse = inverse;
    s.inverse.forward.threads = threads;
    s.seed = seed;
    s.noise_degree = noise_degree;
    return s;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return RunConfig::from_json(ss.str());
}

int cmd_forward(const RunConfig& config) {
    const PotentialSpec& spec = require_potential(config, "forward");
    const Potential q = Potential::from_spec(spec);
    const PointSourceOptions o = forward_options(config);
    const BackscatterData d =
        sample_backscatter(q, config.source_polar, config.source_azimuth, uniform_taus(config.n_tau), o);
    const auto dir = out_dir(config);
    std::ostringstream csv;
    write_backscatter_csv(d, csv);
    write_file(dir / "backscatter.csv", csv.str());
    write_file(dir / "backscatter.json", backscatter_sidecar_json(d, o, spec.to_json()) + "\n");
    return kOk;
}

int cmd_invert(const RunConfig& config) {
    if (config.data.empty()) throw ConfigError("invert: no data file (set \"data\" or --data)");
    std::ifstream in(config.data);
    if (!in) throw ConfigError("invert: cannot open " + config.data);
    const BackscatterData d = read_backscatter_csv(in);
    InverseConfig ic = config.inverse;
    ic.forward.threads = config.threads;
    const ReconstructionState st = layer_strip_reconstruct(d, std::nullopt, ic);

    const auto dir = out_dir(config);
    std::ostringstream csv;
    write_reconstruction_csv(st, csv);
    write_file(dir / "reconstruction.csv", csv.str());

    ordered_json j;
    std::optional<Potential> truth;
    if (config.potential) truth = Potential::from_spec(*config.potential);
    auto shells = ordered_json::array();
    const SphereGrid src(std::max(1, d.n_polar), std::max(2, d.n_azimuth));
    double num = 0.0, den = 0.0;
    for (const auto& sh : st.shells) {
        ordered_json e{{"r", sh.r}, {"residual", sh.residual}, {"iterations", sh.iterations}, {"flagged", sh.flagged}};
        if (truth) {
            // L2 norms over |x| = r of q_hat - q and q
            double diff2 = 0.0, ref2 = 0.0;
            for (std::size_t k = 0; k < sh.q_hat.size(); ++k) {
                const double w = st.radial ? 4.0 * std::numbers::pi : src.weight(static_cast<int>(k));
                const Vec3 x = st.radial ? Vec3{0, 0, sh.r} : sh.r * src.node(static_cast<int>(k));
                const double t = (*truth)(x);
                diff2 += w * (sh.q_hat[k] - t) * (sh.q_hat[k] - t);
                ref2 += w * t * t;
            }
            e["err"] = sh.r * std::sqrt(diff2);
            if (sh.r >= 0.5) {
                num += sh.r * sh.r * diff2;
                den += sh.r * sh.r * ref2;
            }
        }
        shells.push_back(e);
    }
    j["radial"] = st.radial;
    j["shell_errors"] = shells;
    j["any_flagged"] = st.any_flagged();
    if (truth) {
        // null when q vanishes on every shell r >= 0.5; the absolute error is still listed
        j["relative_l2_r_ge_half"] = den > 0.0 ? ordered_json(std::sqrt(num / den)) : ordered_json(nullptr);
        j["l2_error_r_ge_half"] = std::sqrt(num);
    }
    write_file(dir / "reconstruction.json", j.dump(2) + "\n");
    if (st.any_flagged()) {
        std::cerr << "invert: amplification limit reached on some shells\n";
        return kSolverError;
    }
    return kOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, bool mutate_lorentz_sign) {
    suites::SuiteOptions o;
    o.seed = seed;
    o.mutate_lorentz_sign = mutate_lorentz_sign;
    const auto checks = suites::run_suite(suite, o);
    int failed = 0;
    for (const auto& c : checks) {
        std::printf("%s %s value=%.6g tol=%.6g\n", c.passed ? "ok  " : "FAIL", c.name.c_str(), c.value, c.tolerance);
        failed += c.passed ? 0 : 1;
    }
    std::cerr << suites::failures_jsonl(suite, checks);
    return failed == 0 ? kOk : kVerifyFailed;
}

int cmd_stability(const RunConfig& config) {
    const PotentialSpec& spec = require_potential(config, "stability");
    const Potential q = Potential::from_spec(spec);
    const auto reports = stability_sweep(q, config.noise, config.stability());
    const auto dir = out_dir(config);
    ordered_json j;
    j["potential"] = ordered_json::parse(spec.to_json());
    auto arr = ordered_json::array();
    for (const auto& r : reports) arr.push_back(ordered_json::parse(r.to_json()));
    j["reports"] = arr;
    write_file(dir / "stability.json", j.dump(2) + "\n");
    std::ostringstream csv;
    write_sweep_csv(reports, csv);
    write_file(dir / "stability_sweep.csv", csv.str());
    return kOk;
}

int run(int argc, char** argv) {
    CLI::App app{"Point-source backscattering: forward data, layer stripping, checks and stability sweeps"};
    app.require_subcommand(1);
    std::string config_path, out, data;
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out, "output directory");
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    auto* forward = app.add_subcommand("forward", "generate backscattering data");
    auto* invert = app.add_subcommand("invert", "reconstruct q from backscattering data");
    invert->add_option("--data", data, "backscatter CSV");
    auto* verify = app.add_subcommand("verify", "run an invariant suite");
    std::string suite;
    bool mutate = false;
    verify->add_option("--suite", suite, "gamma|kernel|goursat|identities|gronwall")
        ->required()
        ->check(CLI::IsMember(suites::suite_names()));
    verify->add_flag("--mutate-lorentz-sign", mutate, "flip the Lorentz cross term (mutation test)")->group("");
    auto* stability = app.add_subcommand("stability", "noise sweep with fitted stability envelopes");

    // global options may also follow the subcommand
    for (auto* sub : {forward, invert, verify, stability}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        const bool seed_given = app.count("--seed") > 0;
        if (verify->parsed()) {
            std::uint64_t s = seed_given ? seed : 1;
            if (!config_path.empty() && !seed_given) s = load_config(config_path).seed;
            return cmd_verify(suite, s, mutate);
        }
        RunConfig c = config_path.empty() ? RunConfig::from_json("{}") : load_config(config_path);
        if (!out.empty()) c.out = out;
        if (seed_given) c.seed = seed;
        if (threads > 0) c.threads = threads;
        if (!data.empty()) c.data = data;
        if (forward->parsed()) return cmd_forward(c);
        if (invert->parsed()) return cmd_invert(c);
        return cmd_stability(c);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kSolverError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kSolverError;
    }
}

}  // namespace pointscat::cli
