#include "lmcf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lmcf/numerics.hpp"

namespace lmcf {

double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma: requires a positive argument");
    // Lanczos, g = 7, 9 coefficients.
    static const double coef[9] = {0.99999999999980993,  676.5203681218851,
                                   -1259.1392167224028,  771.32342877765313,
                                   -176.61502916214059,  12.507343278686905,
                                   -0.13857109526572012, 9.9843695780195716e-6,
                                   1.5056327351493116e-7};
    if (x < 0.5) {
        // Reflection keeps small arguments accurate.
        return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
    }
    double z = x - 1.0;
    double acc = coef[0];
    for (int i = 1; i < 9; ++i) acc += coef[i] / (z + i);
    double t = z + 7.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(acc);
}

double beta_function(double p, double q) {
    if (!(p > 0.0) || !(q > 0.0))
        throw std::domain_error("beta_function: requires positive arguments");
    return std::exp(log_gamma(p) + log_gamma(q) - log_gamma(p + q));
}

double KappaForm::quad(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n())
        throw std::invalid_argument("KappaForm: point size mismatch");
    double acc = 0.0;
    for (int i = 0; i < n(); ++i) acc += kappa[i] * x[i] * x[i];
    return acc;
}

double KappaForm::weighted_norm(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n())
        throw std::invalid_argument("KappaForm: point size mismatch");
    double acc = 0.0;
    for (int i = 0; i < n(); ++i) acc += kappa[i] * kappa[i] * x[i] * x[i];
    return std::sqrt(acc);
}

double KappaForm::product() const {
    double acc = 1.0;
    for (double k : kappa) acc *= k;
    return acc;
}

void KappaForm::validate() const {
    if (kappa.empty() || kappa.size() > SymMatrix::kMaxDim)
        throw std::invalid_argument("KappaForm: dimension out of range");
    for (double k : kappa)
        if (!(k > 0.0) || !std::isfinite(k))
            throw std::invalid_argument("KappaForm: weights must be positive and finite");
}

namespace {

// Geometric grading toward both endpoints of [lo, hi]: levels panels halving
// toward each end, meeting at the midpoint.
std::vector<double> graded_breakpoints(double lo, double hi, int levels) {
    std::vector<double> pts;
    pts.push_back(lo);
    double width = hi - lo;
    for (int j = levels; j >= 1; --j) pts.push_back(lo + width * std::pow(2.0, -j));
    for (int j = 1; j <= levels; ++j) pts.push_back(hi - width * std::pow(2.0, -j));
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

// One spatial factor: int exp(-kappa [(x-xi)^2/(4 d1) + (xi-y)^2/(4 d2)]) dxi
// by panels centered on the product-Gaussian mode.
double spatial_factor(double kappa, double x, double y, double d1, double d2, int order) {
    double a_q = kappa * (d1 + d2) / (4.0 * d1 * d2);
    double center = (d2 * x + d1 * y) / (d1 + d2);
    double sigma_g = 1.0 / std::sqrt(2.0 * a_q);
    double half_width = 12.0 * sigma_g;
    const int panels = 10;
    const QuadRule& rule = gauss_legendre(order);
    double acc = 0.0;
    for (int pnl = 0; pnl < panels; ++pnl) {
        double a = center - half_width + 2.0 * half_width * pnl / panels;
        double b = center - half_width + 2.0 * half_width * (pnl + 1) / panels;
        double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
        for (int i = 0; i < order; ++i) {
            double xi = mid + hw * rule.nodes[i];
            double e1 = (x - xi) * (x - xi) / (4.0 * d1);
            double e2 = (xi - y) * (xi - y) / (4.0 * d2);
            acc += hw * rule.weights[i] * std::exp(-kappa * (e1 + e2));
        }
    }
    return acc;
}

}  // namespace

ConvolutionCheck convolution_identity_check(const KappaForm& k, double alpha, double beta,
                                            std::span<const double> x,
                                            std::span<const double> y, double t,
                                            double sigma) {
    k.validate();
    const int n = k.n();
    if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n)
        throw std::invalid_argument("convolution_identity_check: point size mismatch");
    if (!(sigma < t)) throw std::invalid_argument("convolution_identity_check: need sigma < t");
    if (!(alpha < n / 2.0 + 1.0) || !(beta < n / 2.0 + 1.0))
        throw std::domain_error("convolution_identity_check: exponents must stay below n/2 + 1");

    ConvolutionCheck out;
    double diff_quad = 0.0;
    for (int i = 0; i < n; ++i) diff_quad += k.kappa[i] * (x[i] - y[i]) * (x[i] - y[i]);
    out.closed_form = std::pow(4.0 * std::numbers::pi, n / 2.0) /
                      std::sqrt(k.product()) *
                      beta_function(n / 2.0 - alpha + 1.0, n / 2.0 - beta + 1.0) *
                      std::pow(t - sigma, n / 2.0 + 1.0 - alpha - beta) *
                      std::exp(-diff_quad / (4.0 * (t - sigma)));

    auto evaluate = [&](int order) {
        // Deeper grading sharpens the endpoint power singularities, but panels
        // must stay well above ulp scale or nodes collapse onto the endpoints.
        std::vector<double> pts = graded_breakpoints(sigma, t, 36);
        const QuadRule& rule = gauss_legendre(order);
        double acc = 0.0;
        for (std::size_t pnl = 0; pnl + 1 < pts.size(); ++pnl) {
            double mid = 0.5 * (pts[pnl] + pts[pnl + 1]);
            double hw = 0.5 * (pts[pnl + 1] - pts[pnl]);
            for (int i = 0; i < order; ++i) {
                double tau = mid + hw * rule.nodes[i];
                double d1 = t - tau, d2 = tau - sigma;
                if (!(d1 > 0.0) || !(d2 > 0.0)) continue;
                double val = std::pow(d1, -alpha) * std::pow(d2, -beta);
                for (int dim = 0; dim < n; ++dim)
                    val *= spatial_factor(k.kappa[dim], x[dim], y[dim], d1, d2, 16);
                acc += hw * rule.weights[i] * val;
            }
        }
        return acc;
    };
    double coarse = evaluate(8);
    double fine = evaluate(16);
    if (std::abs(fine - coarse) > 1e-8 * std::max(std::abs(fine), 1e-300)) {
        coarse = fine;
        fine = evaluate(32);
        if (std::abs(fine - coarse) > 1e-7 * std::max(std::abs(fine), 1e-300))
            throw std::runtime_error(
                "convolution_identity_check: quadrature failed to converge; last change " +
                std::to_string(std::abs(fine - coarse) / std::max(std::abs(fine), 1e-300)));
    }
    out.quadrature = fine;
    return out;
}

CompactBoundResult compact_convolution_bound(const KappaForm& k, const Forcing& f,
                                             std::span<const double> x, double t,
                                             double c_fit) {
    k.validate();
    const int n = k.n();
    if (f.n != n) throw std::invalid_argument("compact_convolution_bound: dimension mismatch");
    if (!f.compact())
        throw std::invalid_argument("compact_convolution_bound: forcing must be compact");
    if (!(c_fit > 0.0))
        throw std::invalid_argument("compact_convolution_bound: constant must be positive");
    const double T = f.support_time();
    const double S0 = f.support_radius();
    if (!(T > 0.0) || !(S0 > 0.0))
        throw std::invalid_argument("compact_convolution_bound: degenerate support");
    if (!(t > -T) || t > 0.0)
        throw std::domain_error("compact_convolution_bound: t must lie in (-T, 0]");
    double kmin = *std::min_element(k.kappa.begin(), k.kappa.end());
    double kmax = *std::max_element(k.kappa.begin(), k.kappa.end());
    double s1 = 2.0 * S0 * kmax / kmin + 1.0;
    double xnorm = 0.0;
    for (double xi : x) xnorm += xi * xi;
    xnorm = std::sqrt(xnorm);
    if (xnorm < s1)
        throw std::domain_error("compact_convolution_bound: |x| below the validity radius " +
                                std::to_string(s1));

    // Spatial tensor rule over the support box, shared across time nodes.
    const int sp_panels = 6, sp_order = 20;
    const QuadRule& sp_rule = gauss_legendre(sp_order);
    std::vector<double> sp_nodes, sp_weights;
    for (int pnl = 0; pnl < sp_panels; ++pnl) {
        double a = -S0 + 2.0 * S0 * pnl / sp_panels;
        double b = -S0 + 2.0 * S0 * (pnl + 1) / sp_panels;
        for (int i = 0; i < sp_order; ++i) {
            sp_nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * sp_rule.nodes[i]);
            sp_weights.push_back(0.5 * (b - a) * sp_rule.weights[i]);
        }
    }
    const std::size_t m = sp_nodes.size();
    std::vector<double> xi(n);
    auto space_integral = [&](double tau) {
        double d1 = t - tau;
        double acc = 0.0;
        std::vector<std::size_t> pos(n, 0);
        while (true) {
            double wgt = 1.0, expo = 0.0;
            for (int dim = 0; dim < n; ++dim) {
                xi[dim] = sp_nodes[pos[dim]];
                wgt *= sp_weights[pos[dim]];
                expo += k.kappa[dim] * (x[dim] - xi[dim]) * (x[dim] - xi[dim]);
            }
            double fv = std::abs(eval_forcing(f, xi, tau));
            if (fv != 0.0) acc += wgt * fv * std::exp(-expo / (4.0 * d1));
            int dim = n - 1;
            while (dim >= 0 && ++pos[dim] == m) pos[dim--] = 0;
            if (dim < 0) break;
        }
        return std::pow(d1, -n / 2.0) * acc;
    };

    auto evaluate = [&](int order) {
        // Grade toward tau = t where the kernel sharpens (it vanishes there
        // for |x| > S0, but with steep derivatives).
        std::vector<double> pts = graded_breakpoints(-T, t, 40);
        const QuadRule& rule = gauss_legendre(order);
        double acc = 0.0;
        for (std::size_t pnl = 0; pnl + 1 < pts.size(); ++pnl) {
            double mid = 0.5 * (pts[pnl] + pts[pnl + 1]);
            double hw = 0.5 * (pts[pnl + 1] - pts[pnl]);
            for (int i = 0; i < order; ++i) acc += hw * rule.weights[i] * space_integral(mid + hw * rule.nodes[i]);
        }
        return acc;
    };
    CompactBoundResult out;
    double coarse = evaluate(8);
    double fine = evaluate(16);
    if (std::abs(fine - coarse) > 1e-8 * std::max(std::abs(fine), 1e-300)) fine = evaluate(32);
    out.integral = fine;

    double shifted = t + T;
    double expo = k.quad(x);
    for (int i = 0; i < n; ++i) expo -= 2.0 * k.kappa[i] * S0 * std::abs(x[i]);
    out.bound = c_fit * std::pow(shifted, -(n / 2.0 - 2.0)) * std::exp(-expo / (4.0 * shifted));
    return out;
}

double calibrate_compact_bound(const KappaForm& k, const Forcing& f,
                               std::span<const double> radii,
                               std::span<const double> times) {
    const int n = k.n();
    double worst = 0.0;
    std::vector<double> x(n, 0.0);
    for (double r : radii) {
        for (double t : times) {
            // Axis-aligned and diagonal probes.
            for (int mode = 0; mode < 2; ++mode) {
                std::fill(x.begin(), x.end(), 0.0);
                if (mode == 0)
                    x[0] = r;
                else
                    for (int i = 0; i < n; ++i) x[i] = r / std::sqrt(double(n));
                CompactBoundResult res = compact_convolution_bound(k, f, x, t, 1.0);
                if (res.bound > 0.0) worst = std::max(worst, res.integral / res.bound);
            }
        }
    }
    if (!(worst > 0.0))
        throw std::runtime_error("calibrate_compact_bound: no usable calibration samples");
    return 1.25 * worst;
}

void DecayBound::validate() const {
    kappa.validate();
    if (!(c_fit > 0.0)) throw std::invalid_argument("DecayBound: constant must be positive");
    if (!(s_tilde >= 0.0)) throw std::invalid_argument("DecayBound: s_tilde must be nonnegative");
    if (!(t_shift > 0.0)) throw std::invalid_argument("DecayBound: time shift must be positive");
}

double eval_decay_bound(const DecayBound& b, std::span<const double> x, double t) {
    if (t > 0.0) throw std::domain_error("eval_decay_bound: requires t <= 0");
    double shifted = t + b.t_shift;
    if (!(shifted > 0.0))
        throw std::domain_error("eval_decay_bound: t must exceed the ignition time");
    const double n = static_cast<double>(b.kappa.n());
    double expo = b.kappa.quad(x) - b.s_tilde * b.kappa.weighted_norm(x);
    return b.c_fit * std::pow(shifted, -(n / 2.0 - 2.0)) * std::exp(-expo / (4.0 * shifted));
}

}  // namespace lmcf
