#pragma once

#include <span>
#include <vector>

#include "lmcf/problem.hpp"

namespace lmcf {

/// Log of the Gamma function for positive arguments (Lanczos approximation,
/// relative accuracy ~1e-13).
double log_gamma(double x);

/// Euler Beta function B(p, q) for positive arguments.
double beta_function(double p, double q);

/// Positive diagonal quadratic form kappa(x) = sum kappa_i x_i^2.
struct KappaForm {
    std::vector<double> kappa;

    int n() const { return static_cast<int>(kappa.size()); }
    double quad(std::span<const double> x) const;
    /// | diag(kappa) x |_2.
    double weighted_norm(std::span<const double> x) const;
    double product() const;
    void validate() const;
};

/// Both sides of the space-time Gaussian convolution identity
///   int_sigma^t int (t-tau)^-alpha (tau-sigma)^-beta
///     prod_i exp(-kappa_i [(x_i-xi_i)^2/(4(t-tau)) + (xi_i-y_i)^2/(4(tau-sigma))])
///   = (4 pi)^(n/2) (prod kappa_i)^(-1/2) B(n/2-alpha+1, n/2-beta+1)
///     (t-sigma)^(n/2+1-alpha-beta) exp(-kappa(x-y)/(4(t-sigma))).
/// The left side is evaluated by Gauss-Legendre panels graded geometrically
/// toward both time endpoints with adaptive order refinement; spatial
/// integrals factor per coordinate around the product-Gaussian center.
/// Requires alpha, beta < n/2 + 1; accuracy degrades as they approach that
/// bound (the randomized suites stay at least 3/4 away from it).
struct ConvolutionCheck {
    double quadrature = 0.0;
    double closed_form = 0.0;
};
ConvolutionCheck convolution_identity_check(const KappaForm& k, double alpha, double beta,
                                            std::span<const double> x,
                                            std::span<const double> y, double t,
                                            double sigma);

/// Heat-type integral of a compactly supported forcing against its far-field
/// decay bound:
///   integral = int_-T^t int_{|xi|_inf <= S0} (t-tau)^(-n/2)
///              exp(-kappa(x-xi)/(4(t-tau))) |f(xi, tau)| dxi dtau,
///   bound    = c_fit (t+T)^-(n/2-2) exp(-(kappa(x) - 2 sum_i kappa_i S0 |x_i|)/(4(t+T))).
/// Valid for |x| >= S1 = 2 S0 max_ij(kappa_i/kappa_j) + 1 (throws
/// std::domain_error below) and t in (-T, 0].
struct CompactBoundResult {
    double integral = 0.0;
    double bound = 0.0;
};
CompactBoundResult compact_convolution_bound(const KappaForm& k, const Forcing& f,
                                             std::span<const double> x, double t,
                                             double c_fit);

/// Fits the bound constant as 1.25 times the largest integral/shape ratio
/// over a deterministic sample of radii and times.
double calibrate_compact_bound(const KappaForm& k, const Forcing& f,
                               std::span<const double> radii,
                               std::span<const double> times);

/// Far-field error envelope C (t+T)^-(n/2-2) exp(-(kappa(x) - s_tilde |Kx|)/(4(t+T))).
struct DecayBound {
    KappaForm kappa;
    double c_fit = 1.0;
    double s_tilde = 0.0;
    double t_shift = 1.0;

    void validate() const;
};
double eval_decay_bound(const DecayBound& b, std::span<const double> x, double t);

}  // namespace lmcf
