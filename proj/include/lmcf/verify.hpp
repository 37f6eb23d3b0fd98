#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lmcf/barriers.hpp"
#include "lmcf/kernels.hpp"
#include "lmcf/problem.hpp"
#include "lmcf/solver.hpp"

namespace lmcf {

/// u minus the quadratic profile, level by level.
GridField error_field(const GridField& u, const QuadraticProfile& q);

enum class ParitySelect { all, even, odd };

/// Gaussian-envelope regression. For admissible samples (|x| in the annulus,
/// |E| > 1e-12, t > -t_shift) the model
///   -4 (t+T) log|E| = x'Kx - s_tilde |Kx| + c_level
/// is fit by alternating linear least squares: the |Kx| column is rebuilt
/// from the previous K iterate. fitted_c converts the last level's intercept
/// through the (t+T)^-(n/2-2) prefactor.
struct RateFit {
    SymMatrix fitted_kappa{1};
    double fitted_c = 0.0;
    double fitted_s = 0.0;
    double r2 = 0.0;
    std::size_t samples = 0;
};
RateFit fit_exponential_rate(const GridField& e, double t_shift, double r_in, double r_out,
                             ParitySelect parity = ParitySelect::all);

/// Log-log fit of the per-node sup over stored levels of |E| against |x| on
/// the annulus.
struct PolyRateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t samples = 0;
};
PolyRateFit fit_polynomial_rate(const GridField& e, double r_in, double r_out);

/// Nodewise bracketing of v = u - b.x - c + K|x|^2/2 - theta t between the
/// two barrier profiles (evaluated in the curvature eigenframe). Positive
/// worst values are violations.
struct SandwichReport {
    double worst_low = 0.0;   // max over nodes of (sub - v)
    double worst_high = 0.0;  // max over nodes of (v - super)
    std::int64_t checked = 0;
};
SandwichReport sandwich_check(const GridField& u, const BarrierProfile& sub,
                              const BarrierProfile& super, const QuadraticProfile& q);

/// Degenerate-operator comparison profile chi(x, t) = R^beta_chi
/// (Q(1 - c t) - rho)^-k on its shrinking domain rho < Q(1 - ct), t in
/// [0, 1/(2c)), with Q = sqrt(1 + R^2), rho = sqrt(1 + |x|^2).
struct ComparisonBarrierParams {
    double k_deg = 1.0;      // diffusion constant of the degenerate operator
    double alpha_deg = 0.5;  // its concave power
    double c = 2.0;
    double k = 2.0;
    double beta_chi = 1.0;
    double r = 10.0;

    void validate() const;
};

double eval_chi(const ComparisonBarrierParams& p, double x_norm, double t);

/// Closed-form minimum of A[chi] = chi_t - K (tr(D^2 chi)^+)^alpha over a
/// deterministic (radius, time) lattice covering the domain.
struct ComparisonBarrierReport {
    double min_value = 0.0;
    double argmin_radius = 0.0;
    double argmin_time = 0.0;
    std::int64_t samples = 0;
};
ComparisonBarrierReport comparison_barrier_check(const ComparisonBarrierParams& p, int n,
                                                 int samples_per_axis = 100);

/// Deterministic coarse-to-fine search for (c, k, beta_chi) keeping
/// min A[chi] positive for every listed R; returns the best witness found.
struct ChiSearchResult {
    ComparisonBarrierParams best;
    std::vector<double> r_values;
    std::vector<double> min_values;
    bool all_positive = false;
};
ChiSearchResult chi_search(std::span<const double> r_values, int n, double k_deg,
                           double alpha_deg);

/// Marches two configurations with ordered data under the same forcing and
/// verifies the discrete comparison principle at every step.
struct OrderingReport {
    bool ordered = true;
    int first_violation_step = -1;
    std::int64_t node = -1;
    double gap = 0.0;  // amount by which the order failed
};
OrderingReport ordering_check(const SolverConfig& lo, const SolverConfig& hi,
                              const Forcing& f, double tol = 1e-12);

/// Average of (I + (A + theta H)^2)^-1 over theta in [0, 1] (8-point
/// Gauss-Legendre), H the discrete Hessian of E at the node. Tends to
/// (I + A^2)^-1 where E flattens.
SymMatrix linearized_coefficients(const GridField& e, const SymMatrix& a, std::size_t level,
                                  std::span<const int> node);

/// Split-sample domination check of the decay envelope: the constant is the
/// largest |E|/shape ratio on the even-parity half of the annulus, then the
/// odd-parity half is scored against the resulting bound.
struct DominationReport {
    DecayBound bound;
    RateFit calibration;
    double holdout_fraction = 0.0;
    std::int64_t holdout_samples = 0;
};
DominationReport bound_domination_check(const GridField& e, const KappaForm& kappa,
                                        double t_shift, double source_radius, double r_in,
                                        double r_out);

}  // namespace lmcf
