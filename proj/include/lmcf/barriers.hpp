#pragma once

#include <limits>
#include <span>
#include <vector>

#include "lmcf/numerics.hpp"
#include "lmcf/problem.hpp"
#include "lmcf/sym_matrix.hpp"

namespace lmcf {

enum class BarrierBranch { sub, super };

/// Shift parameters for the barrier construction. With curvature eigenvalues
/// a_1 <= ... <= a_n, the shifted profile uses d_i = a_i + k_shift > 0 and the
/// drift tau_tilde = tau - theta < 0. m_value is the decay rate of the
/// linearized profile equation and must exceed beta/2.
struct ThetaParams {
    std::vector<double> a;
    double tau = 0.0;
    double beta = 3.0;
    double k_shift = 1.0;
    double theta = 0.0;
    double tau_tilde = 0.0;
    std::vector<double> d;
    double m_value = 0.0;

    int n() const { return static_cast<int>(a.size()); }
    double d_max() const { return d.back(); }
    /// Throws std::runtime_error when any structural invariant is broken.
    void validate() const;
};

/// Chooses theta (and the positivity shift K) for the given eigenvalues so
/// that all barrier inequalities hold with margin: theta exceeds each of the
/// structural lower bounds by at least 1. f_lower_at_0 is the envelope lower
/// bound at s = 0 (a nonpositive number).
ThetaParams select_theta(std::span<const double> a, double tau, double beta,
                         double f_lower_at_0);

/// Envelope pair with lower(s) = -upper(s) <= -f <= upper(s); upper is
/// strictly positive, nonincreasing, and decays like s^(-beta/2). peak/s0
/// describe the plateau; floor_eps keeps the envelope bounded away from zero
/// (zero floor is only meaningful for synthetic test profiles).
struct ForcingEnvelopes {
    double beta = 3.0;
    double peak = 0.0;
    double s0 = 0.0;
    double floor_eps = 1e-3;

    double upper(double s) const;
    double lower(double s) const { return -upper(s); }
};

/// Builds envelopes for a forcing under the given shift parameters. The
/// plateau shoulder s0 is the largest profile coordinate s(x, t) attained on
/// the support (compact kinds) or chosen so the algebraic decay is dominated.
ForcingEnvelopes build_envelopes(const Forcing& f, const ThetaParams& p,
                                 double floor_eps = 1e-3);

/// Root w of F1(w) = -tau_tilde w + sum_i arctan(a_i w) = theta + upper(s)
/// (sub branch, root > 1) or = theta + lower(s) (super branch, root in (0,1)).
/// F1 is strictly increasing, so the root is unique; bisection to 1e-12.
double invert_f1(const ThetaParams& p, const ForcingEnvelopes& env, double s,
                 BarrierBranch branch);

/// Blow-up curve of the h-inversion: the w where the arctangent sum saturates.
/// Sub branch: (theta + upper(s) + n pi/2) / (-tau_tilde), super branch
/// mirrored with lower(s) and -n pi/2.
double w_blowup(const ThetaParams& p, const ForcingEnvelopes& env, double s,
                BarrierBranch branch);

/// Root h of -tau_tilde w + sum_i arctan(a_i w + h) = theta + upper(s) (sub,
/// h <= 0) or theta + lower(s) (super, h >= 0). Requires w between invert_f1
/// and w_blowup for the branch; throws std::domain_error otherwise.
double invert_h(const ThetaParams& p, const ForcingEnvelopes& env, double s, double w,
                BarrierBranch branch);

/// Integrated profile W(s) of dw/ds = h(s, w) / (2 d_n (s + 1)) together with
/// its cumulative integral V(s) = int_0^s W + c_norm and the fitted power-law
/// tail used beyond s_max.
struct BarrierProfile {
    BarrierBranch branch = BarrierBranch::sub;
    ThetaParams params;
    ForcingEnvelopes env;
    std::vector<double> s;
    std::vector<double> w;
    std::vector<double> v;
    double s_max = 0.0;
    double c_norm = 0.0;
    double tail_coef = 0.0;
    double tail_slope = 0.0;

    MonotoneCubic w_interp;
    MonotoneCubic v_interp;

    double eval_w(double s) const;
    double eval_v(double s) const;
    /// Right-hand side of the profile equation at (s, w); w is clamped into
    /// the admissible band before the h-inversion.
    double slope_rhs(double s, double w) const;
};

/// Integrates the profile equation from s = 0 to s_max by RK4 with step
/// doubling (relative tolerance 1e-10). Steps are clamped so the trajectory
/// stays at least 1e-14 inside the trapping bound and 1e-8 away from the
/// blow-up curve. w0 defaults (NaN) to the midpoint of the admissible
/// interval at s = 0.
BarrierProfile integrate_barrier_ode(const ThetaParams& p, const ForcingEnvelopes& env,
                                     BarrierBranch branch,
                                     double w0 = std::numeric_limits<double>::quiet_NaN(),
                                     double s_max = 1e4);

/// Profile coordinate s(x, t) = tau_tilde t + x'Dx / 2, for t <= 0. The
/// point x is expressed in the eigenframe of the curvature matrix.
double barrier_s(const ThetaParams& p, std::span<const double> x, double t);

/// Barrier value V(s(x, t)).
double eval_barrier(const BarrierProfile& bp, std::span<const double> x, double t);

/// Pointwise residual of the shifted operator against the drift target:
/// -v_t + sum_i arctan(lambda_i(D^2 v - K I)) - (theta - f(x, t)).
/// Nonnegative for the sub branch, nonpositive for the super branch.
double barrier_residual(const BarrierProfile& bp, std::span<const double> x, double t,
                        const Forcing& f);

}  // namespace lmcf
