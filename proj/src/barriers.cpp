#include "lmcf/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lmcf {

namespace {

constexpr double kTrapMargin = 1e-14;   // distance kept inside the trapping bound
constexpr double kBlowupMargin = 1e-8;  // distance kept away from the blow-up curve

double sum_inv_1pa2(std::span<const double> a) {
    double s = 0.0;
    for (double ai : a) s += 1.0 / (1.0 + ai * ai);
    return s;
}

double sum_a_over_1pa2(std::span<const double> a) {
    double s = 0.0;
    for (double ai : a) s += ai / (1.0 + ai * ai);
    return s;
}

double sum_min0(std::span<const double> a) {
    double s = 0.0;
    for (double ai : a) s += std::min(ai, 0.0);
    return s;
}

double f1(const ThetaParams& p, double w) {
    double acc = -p.tau_tilde * w;
    for (double ai : p.a) acc += std::atan(ai * w);
    return acc;
}

double f2(const ThetaParams& p, double w, double h) {
    double acc = -p.tau_tilde * w;
    for (double ai : p.a) acc += std::atan(ai * w + h);
    return acc;
}

double branch_target(const ThetaParams& p, const ForcingEnvelopes& env, double s,
                     BarrierBranch branch) {
    return p.theta + (branch == BarrierBranch::sub ? env.upper(s) : env.lower(s));
}

}  // namespace

void ThetaParams::validate() const {
    const int dim = n();
    if (dim < 1 || dim > SymMatrix::kMaxDim)
        throw std::runtime_error("ThetaParams: dimension out of range");
    for (int i = 1; i < dim; ++i)
        if (a[i] < a[i - 1]) throw std::runtime_error("ThetaParams: eigenvalues not ascending");
    double tau_check = 0.0;
    for (double ai : a) tau_check += std::atan(ai);
    if (std::abs(tau_check - tau) > 1e-9)
        throw std::runtime_error("ThetaParams: tau inconsistent with eigenvalues");
    if (!(beta > 2.0)) throw std::runtime_error("ThetaParams: beta must exceed 2");
    if (static_cast<int>(d.size()) != dim)
        throw std::runtime_error("ThetaParams: shifted eigenvalue size mismatch");
    for (int i = 0; i < dim; ++i) {
        if (!(d[i] > 0.0)) throw std::runtime_error("ThetaParams: shifted eigenvalues not positive");
        if (std::abs(d[i] - (a[i] + k_shift)) > 1e-12 * (1.0 + std::abs(a[i]) + k_shift))
            throw std::runtime_error("ThetaParams: d inconsistent with a + K");
    }
    const double half_pi_n = dim * std::numbers::pi / 2.0;
    if (!(theta > half_pi_n)) throw std::runtime_error("ThetaParams: theta too small");
    if (std::abs(tau_tilde - (tau - theta)) > 1e-12 * (1.0 + std::abs(theta)))
        throw std::runtime_error("ThetaParams: tau_tilde inconsistent");
    if (!(tau_tilde < 0.0)) throw std::runtime_error("ThetaParams: tau_tilde must be negative");
    if (!(theta - tau + sum_min0(a) > 0.0))
        throw std::runtime_error("ThetaParams: theta below the monotonicity bound");
    double m_check = (theta - tau + sum_a_over_1pa2(a)) / sum_inv_1pa2(a);
    if (std::abs(m_check - m_value) > 1e-9 * (1.0 + std::abs(m_check)))
        throw std::runtime_error("ThetaParams: m_value inconsistent");
    if (!(m_value > beta / 2.0))
        throw std::runtime_error("ThetaParams: m_value must exceed beta/2");
}

ThetaParams select_theta(std::span<const double> a, double tau, double beta,
                         double f_lower_at_0) {
    if (a.empty() || a.size() > SymMatrix::kMaxDim)
        throw std::invalid_argument("select_theta: dimension out of range");
    for (double ai : a)
        if (!std::isfinite(ai)) throw std::invalid_argument("select_theta: non-finite eigenvalue");
    if (!(beta > 2.0)) throw std::invalid_argument("select_theta: beta must exceed 2");
    if (f_lower_at_0 > 0.0)
        throw std::invalid_argument("select_theta: envelope lower bound must be nonpositive");

    ThetaParams p;
    p.a.assign(a.begin(), a.end());
    std::sort(p.a.begin(), p.a.end());
    double tau_check = 0.0;
    for (double ai : p.a) tau_check += std::atan(ai);
    if (std::abs(tau_check - tau) > 1e-9)
        throw std::invalid_argument("select_theta: tau inconsistent with eigenvalues");
    p.tau = tau;
    p.beta = beta;
    p.k_shift = std::max(0.0, -p.a.front()) + 1.0;
    p.d.resize(p.a.size());
    for (std::size_t i = 0; i < p.a.size(); ++i) p.d[i] = p.a[i] + p.k_shift;

    const double s1 = sum_inv_1pa2(p.a);
    const double s2 = sum_a_over_1pa2(p.a);
    const double half_pi_n = p.n() * std::numbers::pi / 2.0;
    // theta_m makes the linearized decay rate equal beta/2 + 1; the final +1
    // then puts every constraint at margin >= 1.
    const double theta_m = (beta / 2.0 + 1.0) * s1 + tau - s2;
    p.theta = std::max({theta_m, half_pi_n, tau - sum_min0(p.a), half_pi_n - f_lower_at_0}) + 1.0;
    p.tau_tilde = p.tau - p.theta;
    p.m_value = (p.theta - p.tau + s2) / s1;
    p.validate();
    return p;
}

double ForcingEnvelopes::upper(double s) const {
    double decay = std::pow((1.0 + s0) / (1.0 + s), beta / 2.0);
    double main = peak * std::min(1.0, decay);
    double floor_term = floor_eps * std::pow(1.0 + s, -beta / 2.0);
    return std::max(main, floor_term);
}

ForcingEnvelopes build_envelopes(const Forcing& f, const ThetaParams& p, double floor_eps) {
    if (!(floor_eps > 0.0)) throw std::invalid_argument("build_envelopes: floor must be positive");
    if (f.n != p.n()) throw std::invalid_argument("build_envelopes: dimension mismatch");
    ForcingEnvelopes env;
    env.beta = p.beta;
    env.floor_eps = floor_eps;
    env.peak = f.sup_abs();
    if (!std::isfinite(env.peak))
        throw std::invalid_argument("build_envelopes: forcing not bounded");
    switch (f.kind) {
        case ForcingKind::zero:
            env.s0 = 0.0;
            break;
        case ForcingKind::compact_bump:
        case ForcingKind::tabulated:
            // Largest s over the bounding cylinder |x| <= S, -T <= t <= 0.
            env.s0 = -p.tau_tilde * f.support_time() +
                     0.5 * p.d_max() * f.support_radius() * f.support_radius();
            break;
        case ForcingKind::algebraic_decay: {
            if (std::abs(f.beta - p.beta) > 1e-12)
                throw std::invalid_argument("build_envelopes: decay exponent mismatch");
            // On the level set s(x,t) = s the scale r_scale^2 is at least
            // 1 + s/c_max, which the plateau shoulder below dominates.
            double c_max = std::max(-p.tau_tilde, 0.5 * p.d_max());
            env.s0 = std::max(0.0, c_max - 1.0);
            break;
        }
    }
    return env;
}

double invert_f1(const ThetaParams& p, const ForcingEnvelopes& env, double s,
                 BarrierBranch branch) {
    if (s < 0.0) throw std::domain_error("invert_f1: s must be nonnegative");
    const double target = branch_target(p, env, s, branch);
    double lo, hi;
    if (branch == BarrierBranch::sub) {
        lo = 1.0;
        hi = 2.0;
        int guard = 0;
        while (f1(p, hi) < target) {
            hi *= 2.0;
            if (++guard > 60) throw std::runtime_error("invert_f1: bracketing failure");
        }
    } else {
        if (!(target > 0.0))
            throw std::runtime_error("invert_f1: envelope exceeds theta at s = " +
                                     std::to_string(s));
        lo = 0.0;
        hi = 1.0;
    }
    double w = bisect([&](double x) { return f1(p, x) - target; }, lo, hi, 80);
    if (std::abs(f1(p, w) - target) > 1e-12 * std::max(1.0, std::abs(target)))
        throw std::runtime_error("invert_f1: residual above tolerance");
    return w;
}

double w_blowup(const ThetaParams& p, const ForcingEnvelopes& env, double s,
                BarrierBranch branch) {
    const double half_pi_n = p.n() * std::numbers::pi / 2.0;
    const double target = branch_target(p, env, s, branch);
    if (branch == BarrierBranch::sub) return (target + half_pi_n) / (-p.tau_tilde);
    return (target - half_pi_n) / (-p.tau_tilde);
}

double invert_h(const ThetaParams& p, const ForcingEnvelopes& env, double s, double w,
                BarrierBranch branch) {
    if (s < 0.0) throw std::domain_error("invert_h: s must be nonnegative");
    const double target = branch_target(p, env, s, branch);
    const double scale = std::max(1.0, std::abs(target));
    const double at_zero = f1(p, w);
    const bool sub = branch == BarrierBranch::sub;
    // Sign conventions mirror between branches: the sub root is nonpositive,
    // the super root nonnegative.
    if (sub ? at_zero < target - 1e-9 * scale : at_zero > target + 1e-9 * scale)
        throw std::domain_error("invert_h: w outside the trapping bound");
    if (sub ? at_zero <= target : at_zero >= target) return 0.0;
    double mag = 1.0;
    int guard = 0;
    auto extreme = [&](double m) { return sub ? f2(p, w, -m) : f2(p, w, m); };
    while (sub ? extreme(mag) > target : extreme(mag) < target) {
        mag *= 2.0;
        if (++guard > 40) throw std::domain_error("invert_h: w at or beyond the blow-up curve");
    }
    double lo = sub ? -mag : 0.0;
    double hi = sub ? 0.0 : mag;
    double h = bisect([&](double x) { return f2(p, w, x) - target; }, lo, hi, 110);
    if (std::abs(f2(p, w, h) - target) > 1e-12 * scale)
        throw std::runtime_error("invert_h: residual above tolerance");
    return h;
}

double BarrierProfile::eval_w(double sq) const {
    if (sq < 0.0) throw std::domain_error("BarrierProfile: s must be nonnegative");
    if (sq <= s_max) return w_interp(sq);
    double sign = branch == BarrierBranch::sub ? 1.0 : -1.0;
    return 1.0 + sign * tail_coef * std::pow(sq, -params.beta / 2.0);
}

double BarrierProfile::eval_v(double sq) const {
    if (sq < 0.0) throw std::domain_error("BarrierProfile: s must be nonnegative");
    if (sq <= s_max) return v_interp(sq);
    double sign = branch == BarrierBranch::sub ? 1.0 : -1.0;
    double p_tail = params.beta / 2.0 - 1.0;
    double tail = sign * tail_coef * (std::pow(s_max, -p_tail) - std::pow(sq, -p_tail)) / p_tail;
    return v.back() + (sq - s_max) + tail;
}

double BarrierProfile::slope_rhs(double sq, double wq) const {
    double bound = invert_f1(params, env, sq, branch);
    double limit = w_blowup(params, env, sq, branch);
    if (branch == BarrierBranch::sub)
        wq = std::clamp(wq, bound, limit - kBlowupMargin);
    else
        wq = std::clamp(wq, limit + kBlowupMargin, bound);
    double h = invert_h(params, env, sq, wq, branch);
    return h / (2.0 * params.d_max() * (sq + 1.0));
}

BarrierProfile integrate_barrier_ode(const ThetaParams& p, const ForcingEnvelopes& env,
                                     BarrierBranch branch, double w0, double s_max) {
    p.validate();
    if (!(s_max > 1.0)) throw std::invalid_argument("integrate_barrier_ode: s_max too small");
    if (!(p.theta + env.lower(0.0) > p.n() * std::numbers::pi / 2.0))
        throw std::invalid_argument("integrate_barrier_ode: envelope too large for theta");
    if (std::abs(env.beta - p.beta) > 1e-12)
        throw std::invalid_argument("integrate_barrier_ode: envelope exponent mismatch");

    BarrierProfile bp;
    bp.branch = branch;
    bp.params = p;
    bp.env = env;
    bp.s_max = s_max;

    const bool sub = branch == BarrierBranch::sub;
    const double bound0 = invert_f1(p, env, 0.0, branch);
    const double limit0 = w_blowup(p, env, 0.0, branch);
    if (std::isnan(w0)) w0 = 0.5 * (bound0 + limit0);
    if (sub ? (w0 <= bound0 || w0 >= limit0) : (w0 >= bound0 || w0 <= limit0))
        throw std::invalid_argument("integrate_barrier_ode: w0 outside the admissible interval");

    auto clamp_state = [&](double sq, double wq) {
        double bound = invert_f1(p, env, sq, branch);
        double limit = w_blowup(p, env, sq, branch);
        if (sub) return std::clamp(wq, bound + kTrapMargin, limit - kBlowupMargin);
        return std::clamp(wq, limit + kBlowupMargin, bound - kTrapMargin);
    };
    auto rk4 = [&](double sq, double wq, double ds) {
        double k1 = bp.slope_rhs(sq, wq);
        double k2 = bp.slope_rhs(sq + 0.5 * ds, wq + 0.5 * ds * k1);
        double k3 = bp.slope_rhs(sq + 0.5 * ds, wq + 0.5 * ds * k2);
        double k4 = bp.slope_rhs(sq + ds, wq + ds * k3);
        return wq + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };

    const double rel_tol = 1e-10;
    double s = 0.0, w = w0, ds = 1e-3;
    bp.s.push_back(s);
    bp.w.push_back(w);
    long iterations = 0;
    while (s < s_max) {
        if (++iterations > 2'000'000)
            throw std::runtime_error("integrate_barrier_ode: step budget exhausted");
        ds = std::min(ds, s_max - s);
        double full = rk4(s, w, ds);
        double half = rk4(s, w, 0.5 * ds);
        double two_half = rk4(s + 0.5 * ds, half, 0.5 * ds);
        double err = std::abs(two_half - full) / 15.0;
        double tol = rel_tol * std::max(1.0, std::abs(two_half));
        if (err <= tol) {
            s += ds;
            w = clamp_state(s, two_half + (two_half - full) / 15.0);
            bp.s.push_back(s);
            bp.w.push_back(w);
            double grow = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 2.0;
            ds *= std::clamp(grow, 0.5, 2.0);
        } else {
            ds *= std::max(0.1, 0.9 * std::pow(tol / err, 0.2));
        }
    }

    // Tail fit on the last decade: log |w - 1| against log s.
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < bp.s.size(); ++i) {
        if (bp.s[i] >= s_max / 10.0 && std::abs(bp.w[i] - 1.0) > 1e-13) {
            lx.push_back(std::log(bp.s[i]));
            ly.push_back(std::log(std::abs(bp.w[i] - 1.0)));
        }
    }
    if (lx.size() < 8)
        throw std::runtime_error("integrate_barrier_ode: too few tail samples for the fit");
    LineFit tail = fit_line(lx, ly);
    bp.tail_slope = tail.slope;
    // The extension past s_max uses the exact beta/2 power (the fitted slope
    // stays a diagnostic), with the coefficient matched at s_max.
    bp.tail_coef = std::abs(bp.w.back() - 1.0) * std::pow(s_max, p.beta / 2.0);

    std::vector<double> excess(bp.w.size());
    for (std::size_t i = 0; i < bp.w.size(); ++i) excess[i] = bp.w[i] - 1.0;
    std::vector<double> main_integral = cumulative_trapezoid(bp.s, excess);
    double sign = sub ? 1.0 : -1.0;
    double p_tail = p.beta / 2.0 - 1.0;
    double tail_integral = sign * bp.tail_coef * std::pow(s_max, -p_tail) / p_tail;
    bp.c_norm = -(main_integral.back() + tail_integral);
    if (sub ? bp.c_norm > 0.0 : bp.c_norm < 0.0)
        throw std::runtime_error("integrate_barrier_ode: c_norm has the wrong sign");

    std::vector<double> w_total = cumulative_trapezoid(bp.s, bp.w);
    bp.v.resize(bp.s.size());
    for (std::size_t i = 0; i < bp.s.size(); ++i) bp.v[i] = w_total[i] + bp.c_norm;
    bp.w_interp = MonotoneCubic(bp.s, bp.w);
    bp.v_interp = MonotoneCubic(bp.s, bp.v);
    return bp;
}

double barrier_s(const ThetaParams& p, std::span<const double> x, double t) {
    if (t > 0.0) throw std::domain_error("barrier_s: requires t <= 0");
    if (static_cast<int>(x.size()) != p.n())
        throw std::invalid_argument("barrier_s: point size mismatch");
    double acc = p.tau_tilde * t;
    for (int i = 0; i < p.n(); ++i) acc += 0.5 * p.d[i] * x[i] * x[i];
    return acc;
}

double eval_barrier(const BarrierProfile& bp, std::span<const double> x, double t) {
    return bp.eval_v(barrier_s(bp.params, x, t));
}

double barrier_residual(const BarrierProfile& bp, std::span<const double> x, double t,
                        const Forcing& f) {
    const ThetaParams& p = bp.params;
    const double s = barrier_s(p, x, t);
    const double w = bp.eval_w(s);
    const double wp = bp.slope_rhs(s, w);
    const int n = p.n();
    SymMatrix hess(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double val = wp * p.d[i] * x[i] * p.d[j] * x[j];
            if (i == j) val += p.d[i] * w - p.k_shift;
            hess.set(i, j, val);
        }
    }
    double operator_value = -p.tau_tilde * w + lag_operator(hess);
    return operator_value - (p.theta - eval_forcing(f, x, t));
}

}  // namespace lmcf
