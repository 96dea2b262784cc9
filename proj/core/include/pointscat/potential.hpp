#pragma once

#include <functional>
#include <string>

#include "pointscat/geometry.hpp"

namespace pointscat {

using ScalarField = std::function<double(const Vec3&)>;

enum class Symmetry { radial, general };

// Parameters of the synthetic bump family.
struct PotentialSpec {
    std::string kind = "radial_bump";  // "radial_bump" | "angular_bump"
    double amplitude = 1.0;
    double center_radius = 0.0;
    double width = 0.5;
    double margin_h = 0.3;
    double angular_weight = 0.5;  // only used by angular_bump

    static PotentialSpec from_json(const std::string& text);
    std::string to_json() const;
};

// Smooth profile exp(1 - 1/(1-s^2)) on |s| < 1, peak value 1 at s = 0.
double bump_profile(double s);

// A compactly supported potential on the unit ball.
class Potential {
public:
    Potential() = default;

    static Potential from_spec(const PotentialSpec& spec);
    static Potential zero(double margin_h = 0.5);
    // Radial potential from a profile in |x|; the profile must vanish for r >= support_radius.
    static Potential radial(std::function<double(double)> profile, double support_radius, double margin_h,
                            double bound);
    static Potential general(ScalarField field, double support_radius, double margin_h, double bound);

    double operator()(const Vec3& x) const;
    // Radial profile; only meaningful for radial potentials.
    double profile(double r) const;

    double support_radius() const { return support_radius_; }
    double margin() const { return margin_h_; }
    double bound() const { return bound_; }
    Symmetry symmetry() const { return symmetry_; }
    bool is_radial() const { return symmetry_ == Symmetry::radial; }
    bool is_zero() const { return zero_; }

    ScalarField field() const;
    // Same potential composed with a rotation: x -> q(R^T x) where R maps the standard basis onto frame.
    Potential rotated(const Frame& frame) const;

private:
    std::function<double(double)> profile_;
    ScalarField field_;
    double support_radius_ = 0.0;
    double margin_h_ = 0.5;
    double bound_ = 0.0;
    Symmetry symmetry_ = Symmetry::radial;
    bool zero_ = true;
};

}  // namespace pointscat
