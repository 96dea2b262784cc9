#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pointscat/inverse.hpp"

namespace pointscat {

// (1 + 2C sqrt(b-a)) * d_sup * exp(4 C^2 tau): bound on phi when
// phi(tau) <= d(tau) + C * int_a^tau phi(s) / sqrt(tau - s) ds on [a, b].
double gronwall_bound(double d_sup, double C, double a, double b, double tau);

// int_{s0}^{tau} ds / (sqrt(tau - s) sqrt(s - s0)) by tanh-sinh quadrature. Equals pi for every s0 < tau.
double inner_kernel_integral(double s0, double tau);

// d(tau_i) + C * int_a^{tau_i} phi(s) / sqrt(tau_i - s) ds with phi piecewise linear on the (uniform) samples.
std::vector<double> abel_rhs(const std::vector<double>& taus, const std::vector<double>& phi,
                             const std::vector<double>& d, double C);

// phi with equality in the integral inequality: product-trapezoid solution of the Abel-Volterra equation.
std::vector<double> abel_saturating_solution(const std::vector<double>& taus, const std::vector<double>& d, double C);

struct GronwallCheck {
    bool bound_holds = false;           // phi <= gronwall_bound at every sample
    bool inequality_satisfied = false;  // phi <= abel_rhs at every sample (up to rounding)
    double min_slack = 0.0;             // min over samples of (bound - phi) / bound
    double inner_max = 0.0;             // largest inner kernel integral over the random pairs
    double inner_error = 0.0;           // max |inner - pi|
    bool inner_within_bound = false;    // inner_max <= 4
    bool ok() const { return bound_holds && inner_within_bound; }
};

// phi and d sampled on a uniform grid taus over [a, b]; the inner estimate is checked at `pairs` random (s0, tau).
GronwallCheck gronwall_verify(const std::vector<double>& taus, const std::vector<double>& phi,
                              const std::vector<double>& d, double beta_C, std::uint64_t seed = 1, int pairs = 32);

struct ExponentialOptimum {
    double bound = 0.0;
    double ell0 = 0.0;
    bool small_lambda = false;  // Lambda < 1/e branch
};

// Bound on f(ell0) when f(ell) <= A ell + Lambda exp(c / ell^4).
ExponentialOptimum optimise_exponential(double A, double c, double lambda);
double exponential_envelope(double A, double c, double lambda, double ell);

struct CoordsIdentity {
    double lhs1 = 0.0;  // int_{|a|=1} int_{|x-a|=tau} f
    double rhs1 = 0.0;  // 2 pi tau int_{|x|>=1-tau} f / |x|
    double lhs2 = 0.0;  // int_{|a|=1} int_{|x-a|<=tau} f
    double rhs2 = 0.0;  // pi int_{|x|>=1-tau} f (tau^2 - (1-|x|)^2) / |x|
};

// f must vanish outside the unit ball. resolution sets the sphere grids (n x 2n) and the radial panels.
CoordsIdentity coords_identity_check(const ScalarField& f, double tau, int resolution = 48);

// Height of the cap {a on the unit sphere : |x-a| <= tau} for |x| = s, clamped to [0, 2].
double cap_height(double s, double tau);
inline double cap_area(double s, double tau) { return 2.0 * 3.14159265358979323846 * cap_height(s, tau); }

struct StabilityConfig {
    int source_polar = 2;
    int source_azimuth = 4;
    int n_tau = 96;
    PointSourceOptions forward;  // data generation
    InverseConfig inverse;
    std::uint64_t seed = 1;
    int noise_degree = 3;  // degree of the random angular noise factor

    static StabilityConfig from_json(const std::string& text);
    std::string to_json() const;
};

struct ShellError {
    double r = 0.0;
    double err = 0.0;        // ||q_hat - q||_{L2(|x|=r)}
    double noise_err = 0.0;  // ||q_hat - q_hat(noise 0)||_{L2(|x|=r)}
    bool flagged = false;
};

struct StabilityFit {
    std::string kind;  // "exp_r4" | "holder"
    bool degenerate = true;
    double c_hat = 0.0;      // log(err / Lambda) ~ c / r^4 (through the origin)
    double alpha_hat = 0.0;  // err ~ C r^alpha Lambda
    double log_C = 0.0;
    double residual = 0.0;   // rms of the log fit
    int shells_used = 0;
    bool envelope_holds = false;  // err <= exp(c_hat / r^4) Lambda on every fitted shell
};

struct StabilityReport {
    double noise = 0.0;
    double lambda = 0.0;  // measurement norm of the perturbation
    std::vector<ShellError> shells;
    StabilityFit fit;
    double full_err = 0.0;  // L2 error over the reconstructed annulus
    double D_hat = 0.0;     // full_err * ln(1/Lambda)^{1/4} (general) or full_err / Lambda^{1/(1+alpha)} (radial)
    double log_bound = 0.0; // optimise_exponential bound with A = 2 sqrt(4 pi) M and c = c_hat
    bool log_bound_holds = false;
    bool any_flagged = false;

    std::string to_json() const;
};

// Forward data from q_true, perturbation at measurement-norm scale `noise`, reconstruction and fits.
StabilityReport stability_experiment(const Potential& q_true, double noise, const StabilityConfig& config);

// Same for several noise levels, sharing one forward solve and one noiseless reconstruction.
std::vector<StabilityReport> stability_sweep(const Potential& q_true, const std::vector<double>& noises,
                                             const StabilityConfig& config);

// Smooth random angular factor of unit L2 norm on the source grid, constant in tau.
std::vector<double> noise_pattern(int n_polar, int n_azimuth, int degree, std::uint64_t seed);

// Columns noise,lambda,r,err,noise_err,flagged.
void write_sweep_csv(const std::vector<StabilityReport>& reports, std::ostream& out);

}  // namespace pointscat
