#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pointscat/point_source.hpp"

namespace pointscat {

// k(x,tau,a) = (r1+r2)(x, 2tau-|x-a|) / (4 pi |x-a|) + int_{|x-a|}^{2tau-|x-a|} r1(x,2tau-t) r2(x,t) dt.
// sol2 == nullptr means q2 = 0 (r2 = 0). Throws std::invalid_argument at x = a or for |x-a| > tau.
double boundary_kernel(const PointSourceSolution& sol1, const PointSourceSolution* sol2, const Vec3& x, double tau,
                       int t_nodes = 16);

struct BoundaryIdentity {
    double lhs = 0.0;     // U1(a,2tau) - U2(a,2tau)
    double rhs = 0.0;     // surface_term + volume_term
    double surface_term = 0.0;
    double volume_term = 0.0;
    double defect() const { return std::abs(lhs - rhs); }
};

// Both sides of the boundary identity at (a, tau). sol2 == nullptr means q2 = 0.
BoundaryIdentity boundary_identity_check(const PointSourceSolution& sol1, const PointSourceSolution* sol2, double tau,
                                         int resolution = 48);
BoundaryIdentity boundary_identity_check(const Potential& q1, const Potential& q2, const Vec3& a, double tau,
                                         const PointSourceOptions& options = {}, int resolution = 48);

struct SphericalMeanDerivative {
    double lhs = 0.0;      // d/dtau of (1/(4 pi tau)) * integral over |x-a| = tau of Q
    double leading = 0.0;  // ((1-tau)/2) Q((1-tau)a)
    double error_term = 0.0;  // E = lhs - leading
    // Right side of |E|^2 <= 3/(pi(1-tau)) sum_{i<j} int |Omega_ij Q|^2 / sqrt(|x|-(1-tau)) dsigma.
    double bound = 0.0;
    // abs_tol absorbs discretisation error of the tau-difference where Q is at rounding level
    bool bound_holds(double abs_tol = 0.0) const {
        const double e = std::max(0.0, std::abs(error_term) - abs_tol);
        return e * e <= bound * (1.0 + 1e-9) + 1e-300;
    }
};

SphericalMeanDerivative spherical_mean_derivative(const ScalarField& Q, const Vec3& a, double tau,
                                                  int resolution = 128, double step = 1e-3);

// Omega_ij Q = x_i d_j Q - x_j d_i Q with axes numbered 1..3.
double angular_derivative(const ScalarField& Q, int i, int j, const Vec3& x, double step = 1e-4);

struct AngularControlEstimate {
    std::vector<double> radii;
    std::vector<double> ratio;  // sqrt(sum_{i<j} |Omega_ij Q|^2 / |Q|^2) per radius; +inf if only the denominator vanishes
    double S = 0.0;             // max over radii with a nonzero denominator
};

AngularControlEstimate angular_control_estimate(const ScalarField& Q, const std::vector<double>& radii,
                                                const SphereGrid& sphere);

struct InverseConfig {
    int shells = 0;                 // shells to reconstruct from the outside (0: every tau node)
    int fixpoint_max = 2;           // kernel-correction iterations per shell
    double damping = 1.0;           // in (0, 1]
    double tolerance = 1e-6;        // relative change that ends the correction loop
    double amplification_limit = 1e3;
    double noise_floor = 0.0;       // assumed noise level of the derivative channel
    double margin_h = 0.1;          // q = 0 for |x| > 1 - h
    std::string symmetry = "auto";  // "auto" | "radial" | "general"
    PointSourceOptions forward;     // forward re-solves

    static InverseConfig from_json(const std::string& text);
    std::string to_json() const;
};

struct ShellResult {
    double tau = 0.0;
    double r = 0.0;
    std::vector<double> q_hat;  // one value (radial) or one per source node
    double residual = 0.0;      // last relative update
    int iterations = 0;
    bool flagged = false;       // amplification guard tripped
};

struct ReconstructionState {
    bool radial = true;
    int n_polar = 0;
    int n_azimuth = 0;
    double margin_h = 0.1;
    std::vector<ShellResult> shells;  // ordered outside-in (decreasing r)

    bool any_flagged() const;
    // q_hat as a potential: cubic in r between shells, constant inward of the deepest shell, 0 beyond 1-h.
    Potential potential() const;
};

// Reference for difference reconstructions: data from a known potential q2. Empty means q2 = 0.
struct ReconstructionReference {
    BackscatterData data;
    Potential potential;
};

// Throws ConfigError for malformed data grids (general reconstruction needs n_polar >= 2).
ReconstructionState layer_strip_reconstruct(const BackscatterData& data,
                                            const std::optional<ReconstructionReference>& reference,
                                            const InverseConfig& config);

// Columns r,polar,azimuth,q_hat,residual,flagged.
void write_reconstruction_csv(const ReconstructionState& s, std::ostream& out);

}  // namespace pointscat
