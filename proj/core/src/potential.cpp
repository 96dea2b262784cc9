#include "pointscat/potential.hpp"

#include <cmath>
#include <json.hpp>

#include "pointscat/error.hpp"

namespace pointscat {

using nlohmann::json;

double bump_profile(double s) {
    const double s2 = s * s;
    if (s2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s2));
}

PotentialSpec PotentialSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("potential: ") + e.what());
    }
    PotentialSpec s;
    try {
        s.kind = j.at("kind").get<std::string>();
        s.amplitude = j.at("amplitude").get<double>();
        s.center_radius = j.at("center_radius").get<double>();
        s.width = j.at("width").get<double>();
        s.margin_h = j.at("margin_h").get<double>();
        if (j.contains("angular_weight")) s.angular_weight = j.at("angular_weight").get<double>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("potential: ") + e.what());
    }
    return s;
}

std::string PotentialSpec::to_json() const {
    json j{{"kind", kind},
           {"amplitude", amplitude},
           {"center_radius", center_radius},
           {"width", width},
           {"margin_h", margin_h}};
    if (kind == "angular_bump") j["angular_weight"] = angular_weight;
    return j.dump();
}

Potential Potential::from_spec(const PotentialSpec& spec) {
    const double c = spec.center_radius, w = spec.width, h = spec.margin_h;
    if (!(w > 0.0) || c < 0.0) throw ConfigError("potential: width must be positive, center_radius nonnegative");
    if (!(h > 0.0 && h < 1.0)) throw ConfigError("potential: margin_h must lie in (0,1)");
    if (c + w > 1.0 - h + 1e-12) throw ConfigError("potential: support exceeds 1 - margin_h");
    // A shell bump that reaches the origin would have a kink there.
    if (c > 0.0 && c < w) throw ConfigError("potential: need center_radius = 0 or center_radius >= width");
    if (!std::isfinite(spec.amplitude)) throw ConfigError("potential: amplitude must be finite");
    const double amp = spec.amplitude;
    auto prof = [amp, c, w](double r) { return amp * bump_profile((r - c) / w); };
    if (spec.kind == "radial_bump") return radial(prof, c + w, h, std::abs(amp));
    if (spec.kind == "angular_bump") {
        const double kappa = spec.angular_weight;
        const double reach = c + w;
        if (std::abs(kappa) >= 1.0) throw ConfigError("potential: angular_weight must be below 1 in magnitude");
        auto f = [prof, kappa, reach](const Vec3& x) { return prof(norm(x)) * (1.0 + kappa * x.x / reach); };
        return general(f, reach, h, std::abs(amp) * (1.0 + std::abs(kappa)));
    }
    throw ConfigError("potential: unknown kind '" + spec.kind + "'");
}

Potential Potential::zero(double margin_h) {
    Potential p;
    p.margin_h_ = margin_h;
    p.support_radius_ = 0.0;
    p.profile_ = [](double) { return 0.0; };
    p.field_ = [](const Vec3&) { return 0.0; };
    p.zero_ = true;
    return p;
}

Potential Potential::radial(std::function<double(double)> profile, double support_radius, double margin_h,
                            double bound) {
    Potential p;
    p.profile_ = std::move(profile);
    auto pr = p.profile_;
    p.field_ = [pr](const Vec3& x) { return pr(norm(x)); };
    p.support_radius_ = support_radius;
    p.margin_h_ = margin_h;
    p.bound_ = bound;
    p.symmetry_ = Symmetry::radial;
    p.zero_ = false;
    return p;
}

Potential Potential::general(ScalarField field, double support_radius, double margin_h, double bound) {
    Potential p;
    p.field_ = std::move(field);
    p.support_radius_ = support_radius;
    p.margin_h_ = margin_h;
    p.bound_ = bound;
    p.symmetry_ = Symmetry::general;
    p.zero_ = false;
    return p;
}

double Potential::operator()(const Vec3& x) const {
    if (zero_) return 0.0;
    if (dot(x, x) >= support_radius_ * support_radius_) return 0.0;
    return field_(x);
}

double Potential::profile(double r) const {
    if (zero_ || r >= support_radius_) return 0.0;
    return profile_ ? profile_(r) : field_(Vec3{0, 0, r});
}

ScalarField Potential::field() const {
    Potential copy = *this;
    return [copy](const Vec3& x) { return copy(x); };
}

Potential Potential::rotated(const Frame& frame) const {
    if (zero_ || symmetry_ == Symmetry::radial) return *this;
    Potential p = *this;
    auto inner = field_;
    p.field_ = [inner, frame](const Vec3& x) {
        return inner(Vec3{dot(x, frame.e1), dot(x, frame.e2), dot(x, frame.e3)});
    };
    return p;
}

}  // namespace pointscat
