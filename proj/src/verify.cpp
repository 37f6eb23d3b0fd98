#include "lmcf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lmcf/numerics.hpp"

namespace lmcf {

namespace {

constexpr double kErrorFloor = 1e-12;  // |E| below this is treated as converged

int node_parity(const SpaceTimeGrid& g, std::int64_t node) {
    auto idx = g.unpack(node);
    int acc = 0;
    for (int d = 0; d < g.n; ++d) acc += idx[d];
    return acc & 1;
}

}  // namespace

GridField error_field(const GridField& u, const QuadraticProfile& q) {
    if (q.dim() != u.grid.n) throw std::invalid_argument("error_field: dimension mismatch");
    GridField e(u.grid);
    std::array<double, 3> xbuf{};
    std::span<double> x(xbuf.data(), u.grid.n);
    for (std::size_t lev = 0; lev < u.level_count(); ++lev) {
        std::vector<double> vals(u.levels[lev].size());
        for (std::int64_t node = 0; node < u.grid.node_count(); ++node) {
            u.grid.node_coords(node, x);
            vals[node] = u.levels[lev][node] - q.eval(x, u.times[lev]);
        }
        e.add_level(u.times[lev], std::move(vals));
    }
    return e;
}

RateFit fit_exponential_rate(const GridField& e, double t_shift, double r_in, double r_out,
                             ParitySelect parity) {
    const SpaceTimeGrid& g = e.grid;
    const int n = g.n;
    if (!(t_shift > 0.0)) throw std::invalid_argument("fit_exponential_rate: bad time shift");
    if (!(0.0 <= r_in && r_in < r_out))
        throw std::invalid_argument("fit_exponential_rate: bad annulus");
    if (e.level_count() == 0) throw std::invalid_argument("fit_exponential_rate: empty field");

    struct Sample {
        std::array<double, 3> x;
        double y;
        std::size_t level;
    };
    std::vector<Sample> samples;
    std::vector<std::size_t> used_levels;
    std::array<double, 3> xbuf{};
    std::span<double> x(xbuf.data(), n);
    for (std::size_t lev = 0; lev < e.level_count(); ++lev) {
        double shifted = e.times[lev] + t_shift;
        if (!(shifted > 0.0)) continue;
        bool any = false;
        for (std::int64_t node = 0; node < g.node_count(); ++node) {
            if (parity != ParitySelect::all &&
                node_parity(g, node) != (parity == ParitySelect::odd ? 1 : 0))
                continue;
            double mag = std::abs(e.levels[lev][node]);
            if (mag <= kErrorFloor) continue;
            g.node_coords(node, x);
            double r = 0.0;
            for (int d = 0; d < n; ++d) r += x[d] * x[d];
            r = std::sqrt(r);
            if (r < r_in || r > r_out) continue;
            Sample s;
            s.x = xbuf;
            s.y = -4.0 * shifted * std::log(mag);
            s.level = used_levels.size();
            samples.push_back(s);
            any = true;
        }
        if (any) used_levels.push_back(lev);
    }
    const std::size_t quad_terms = static_cast<std::size_t>(n) * (n + 1) / 2;
    const std::size_t cols_full = quad_terms + 1 + used_levels.size();  // + |Kx| + intercepts
    if (samples.size() < 10 * cols_full)
        throw std::runtime_error("fit_exponential_rate: insufficient data (" +
                                 std::to_string(samples.size()) + " samples for " +
                                 std::to_string(cols_full) + " coefficients)");

    SymMatrix k_mat(n);
    double s_tilde = 0.0;
    std::vector<double> design;
    std::vector<double> rhs(samples.size());
    std::vector<double> coef;
    std::size_t cols = 0;
    for (int pass = 0; pass < 6; ++pass) {
        // The |Kx| column needs a K iterate, so the first pass drops it.
        const bool with_s = pass > 0;
        cols = quad_terms + (with_s ? 1 : 0) + used_levels.size();
        design.assign(samples.size() * cols, 0.0);
        for (std::size_t row = 0; row < samples.size(); ++row) {
            const Sample& smp = samples[row];
            double* dst = design.data() + row * cols;
            std::size_t cidx = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j)
                    dst[cidx++] = (i == j) ? smp.x[i] * smp.x[i] : 2.0 * smp.x[i] * smp.x[j];
            if (with_s) {
                double knorm = 0.0;
                for (int i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j) acc += k_mat(i, j) * smp.x[j];
                    knorm += acc * acc;
                }
                dst[cidx++] = -std::sqrt(knorm);
            }
            for (std::size_t lev = 0; lev < used_levels.size(); ++lev)
                dst[cidx++] = (smp.level == lev) ? 1.0 : 0.0;
            rhs[row] = smp.y;
        }
        coef = lsq_solve(design, rhs, cols);
        std::size_t cidx = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) k_mat.set(i, j, coef[cidx++]);
        if (with_s) s_tilde = coef[quad_terms];
    }

    RateFit fit;
    fit.fitted_kappa = k_mat;
    fit.fitted_s = s_tilde;
    fit.samples = samples.size();
    double ss_res = 0.0, ss_tot = 0.0, mean = 0.0;
    for (std::size_t row = 0; row < samples.size(); ++row) mean += rhs[row];
    mean /= samples.size();
    for (std::size_t row = 0; row < samples.size(); ++row) {
        double pred = 0.0;
        for (std::size_t cidx2 = 0; cidx2 < cols; ++cidx2)
            pred += design[row * cols + cidx2] * coef[cidx2];
        ss_res += (rhs[row] - pred) * (rhs[row] - pred);
        ss_tot += (rhs[row] - mean) * (rhs[row] - mean);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    // Convert the final level's intercept through the time prefactor.
    double last_t = e.times[used_levels.back()];
    double shifted = last_t + t_shift;
    double intercept = coef[cols - 1];
    double p_exp = n / 2.0 - 2.0;
    fit.fitted_c = std::exp(p_exp * std::log(shifted) - intercept / (4.0 * shifted));
    return fit;
}

PolyRateFit fit_polynomial_rate(const GridField& e, double r_in, double r_out) {
    const SpaceTimeGrid& g = e.grid;
    if (!(0.0 < r_in && r_in < r_out))
        throw std::invalid_argument("fit_polynomial_rate: bad annulus");
    if (e.level_count() == 0) throw std::invalid_argument("fit_polynomial_rate: empty field");
    std::vector<double> lx, ly;
    std::array<double, 3> xbuf{};
    std::span<double> x(xbuf.data(), g.n);
    for (std::int64_t node = 0; node < g.node_count(); ++node) {
        g.node_coords(node, x);
        double r = 0.0;
        for (int d = 0; d < g.n; ++d) r += x[d] * x[d];
        r = std::sqrt(r);
        if (r < r_in || r > r_out) continue;
        double sup = 0.0;
        for (std::size_t lev = 0; lev < e.level_count(); ++lev)
            sup = std::max(sup, std::abs(e.levels[lev][node]));
        if (sup <= kErrorFloor) continue;
        lx.push_back(std::log(r));
        ly.push_back(std::log(sup));
    }
    if (lx.size() < 10)
        throw std::runtime_error("fit_polynomial_rate: insufficient data (" +
                                 std::to_string(lx.size()) + " samples)");
    LineFit line = fit_line(lx, ly);
    PolyRateFit fit;
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    fit.r2 = line.r2;
    fit.samples = lx.size();
    return fit;
}

SandwichReport sandwich_check(const GridField& u, const BarrierProfile& sub,
                              const BarrierProfile& super, const QuadraticProfile& q) {
    if (q.dim() != u.grid.n) throw std::invalid_argument("sandwich_check: dimension mismatch");
    const ThetaParams& ps = sub.params;
    if (std::abs(ps.theta - super.params.theta) > 1e-12 ||
        std::abs(ps.k_shift - super.params.k_shift) > 1e-12)
        throw std::invalid_argument("sandwich_check: barrier branches use different shifts");
    const int n = u.grid.n;
    EigenDecomposition frame = eigh(q.a);
    SandwichReport report;
    // Report the true extremes, including negative margins when the data sit
    // strictly inside the bracket.
    report.worst_low = -std::numeric_limits<double>::infinity();
    report.worst_high = -std::numeric_limits<double>::infinity();
    std::array<double, 3> xbuf{};
    std::array<double, SymMatrix::kMaxDim> ybuf{};
    std::span<double> x(xbuf.data(), n);
    std::span<double> y(ybuf.data(), n);
    for (std::size_t lev = 0; lev < u.level_count(); ++lev) {
        double t = u.times[lev];
        for (std::int64_t node = 0; node < u.grid.node_count(); ++node) {
            u.grid.node_coords(node, x);
            double norm2 = 0.0, lin = 0.0;
            for (int i = 0; i < n; ++i) {
                norm2 += x[i] * x[i];
                lin += q.b[i] * x[i];
            }
            for (int col = 0; col < n; ++col) {
                double acc = 0.0;
                for (int row = 0; row < n; ++row) acc += frame.vector(row, col) * x[row];
                y[col] = acc;
            }
            double v = u.levels[lev][node] - lin - q.c + 0.5 * ps.k_shift * norm2 -
                       ps.theta * t;
            double lo = eval_barrier(sub, y, t);
            double hi = eval_barrier(super, y, t);
            report.worst_low = std::max(report.worst_low, lo - v);
            report.worst_high = std::max(report.worst_high, v - hi);
            ++report.checked;
        }
    }
    return report;
}

void ComparisonBarrierParams::validate() const {
    if (!(k_deg > 0.0)) throw std::invalid_argument("ComparisonBarrierParams: K must be positive");
    if (!(alpha_deg > 0.0) || alpha_deg > 1.0)
        throw std::invalid_argument("ComparisonBarrierParams: alpha must be in (0, 1]");
    if (!(c > 0.0) || !(k > 0.0) || !(beta_chi > 0.0) || !(r > 1.0))
        throw std::invalid_argument("ComparisonBarrierParams: parameters must be positive, R > 1");
}

double eval_chi(const ComparisonBarrierParams& p, double x_norm, double t) {
    double q_big = std::sqrt(1.0 + p.r * p.r);
    double rho = std::sqrt(1.0 + x_norm * x_norm);
    double gap = q_big * (1.0 - p.c * t) - rho;
    if (!(p.c * t < 0.5) || !(gap > 0.0))
        throw std::domain_error("eval_chi: point outside the comparison domain");
    return std::pow(p.r, p.beta_chi) * std::pow(gap, -p.k);
}

namespace {

double chi_operator_value(const ComparisonBarrierParams& p, int n, double x_norm, double t) {
    double q_big = std::sqrt(1.0 + p.r * p.r);
    double rho = std::sqrt(1.0 + x_norm * x_norm);
    double gap = q_big * (1.0 - p.c * t) - rho;
    double rb = std::pow(p.r, p.beta_chi);
    double chi_t = rb * p.k * p.c * q_big * std::pow(gap, -p.k - 1.0);
    // tr D^2 chi; every term is positive, so the positive part is itself.
    double x2 = x_norm * x_norm;
    double trace = rb * (p.k * (p.k + 1.0) * std::pow(gap, -p.k - 2.0) * x2 / (rho * rho) +
                         p.k * std::pow(gap, -p.k - 1.0) * (n / rho - x2 / (rho * rho * rho)));
    return chi_t - p.k_deg * std::pow(trace, p.alpha_deg);
}

}  // namespace

ComparisonBarrierReport comparison_barrier_check(const ComparisonBarrierParams& p, int n,
                                                 int samples_per_axis) {
    p.validate();
    if (n < 1 || n > SymMatrix::kMaxDim)
        throw std::invalid_argument("comparison_barrier_check: dimension out of range");
    if (samples_per_axis < 2)
        throw std::invalid_argument("comparison_barrier_check: need at least two samples");
    double q_big = std::sqrt(1.0 + p.r * p.r);
    ComparisonBarrierReport report;
    report.min_value = std::numeric_limits<double>::infinity();
    const double t_hi = 0.999 / (2.0 * p.c);
    for (int it = 0; it < samples_per_axis; ++it) {
        double t = t_hi * it / (samples_per_axis - 1);
        double rho_max = q_big * (1.0 - p.c * t);
        double x_max = std::sqrt(std::max(rho_max * 0.999 * rho_max * 0.999 - 1.0, 0.0));
        for (int ix = 0; ix < samples_per_axis; ++ix) {
            double x_norm = x_max * ix / (samples_per_axis - 1);
            double val = chi_operator_value(p, n, x_norm, t);
            ++report.samples;
            if (val < report.min_value) {
                report.min_value = val;
                report.argmin_radius = x_norm;
                report.argmin_time = t;
            }
        }
    }
    return report;
}

ChiSearchResult chi_search(std::span<const double> r_values, int n, double k_deg,
                           double alpha_deg) {
    if (r_values.empty()) throw std::invalid_argument("chi_search: need at least one R");
    auto score = [&](const ComparisonBarrierParams& p) {
        double worst = std::numeric_limits<double>::infinity();
        for (double r : r_values) {
            ComparisonBarrierParams pr = p;
            pr.r = r;
            worst = std::min(worst, comparison_barrier_check(pr, n, 50).min_value);
        }
        return worst;
    };
    ComparisonBarrierParams best;
    best.k_deg = k_deg;
    best.alpha_deg = alpha_deg;
    double best_score = -std::numeric_limits<double>::infinity();
    for (double c : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        for (double k : {1.5, 2.0, 3.0, 4.0}) {
            for (double bc : {0.5, 1.0, 1.5, 2.0}) {
                ComparisonBarrierParams p;
                p.k_deg = k_deg;
                p.alpha_deg = alpha_deg;
                p.c = c;
                p.k = k;
                p.beta_chi = bc;
                p.r = r_values[0];
                double sc = score(p);
                if (sc > best_score) {
                    best_score = sc;
                    best = p;
                }
            }
        }
    }
    // Two local refinement rounds around the best triple.
    for (int round = 0; round < 2; ++round) {
        double scale = round == 0 ? std::numbers::sqrt2 : std::pow(2.0, 0.25);
        ComparisonBarrierParams center = best;
        for (double fc : {1.0 / scale, 1.0, scale})
            for (double fk : {1.0 / scale, 1.0, scale})
                for (double fb : {1.0 / scale, 1.0, scale}) {
                    ComparisonBarrierParams p = center;
                    p.c *= fc;
                    p.k *= fk;
                    p.beta_chi *= fb;
                    double sc = score(p);
                    if (sc > best_score) {
                        best_score = sc;
                        best = p;
                    }
                }
    }
    ChiSearchResult result;
    result.best = best;
    result.all_positive = best_score > 0.0;
    for (double r : r_values) {
        ComparisonBarrierParams pr = best;
        pr.r = r;
        result.r_values.push_back(r);
        result.min_values.push_back(comparison_barrier_check(pr, n, 100).min_value);
    }
    return result;
}

OrderingReport ordering_check(const SolverConfig& lo, const SolverConfig& hi,
                              const Forcing& f, double tol) {
    lo.validate();
    hi.validate();
    if (lo.grid.node_count() != hi.grid.node_count() || lo.grid.n != hi.grid.n ||
        std::abs(lo.grid.dt - hi.grid.dt) > 1e-15 ||
        std::abs(lo.grid.t_start - hi.grid.t_start) > 1e-15)
        throw std::invalid_argument("ordering_check: configurations use different grids");
    OrderingReport report;
    GridField a(lo.grid), b(hi.grid);
    a.add_level(lo.grid.t_start, lo.initial.levels[0]);
    b.add_level(hi.grid.t_start, hi.initial.levels[0]);
    const int steps = lo.grid.steps();
    for (int k = 0; k <= steps; ++k) {
        for (std::int64_t node = 0; node < lo.grid.node_count(); ++node) {
            double gap = a.levels[0][node] - b.levels[0][node];
            if (gap > tol) {
                report.ordered = false;
                report.first_violation_step = k;
                report.node = node;
                report.gap = gap;
                return report;
            }
        }
        if (k == steps) break;
        a = step(a, f, lo);
        b = step(b, f, hi);
    }
    return report;
}

SymMatrix linearized_coefficients(const GridField& e, const SymMatrix& a, std::size_t level,
                                  std::span<const int> node) {
    if (a.dim() != e.grid.n)
        throw std::invalid_argument("linearized_coefficients: dimension mismatch");
    SymMatrix hess = hessian_at(e, level, node);
    const QuadRule& rule = gauss_legendre(8);
    // Accumulate deviations from the constant term so a vanishing Hessian
    // reproduces the limit exactly instead of picking up quadrature roundoff.
    SymMatrix base = lag_operator_derivative(a);
    SymMatrix out = base;
    for (int q = 0; q < 8; ++q) {
        double theta = 0.5 + 0.5 * rule.nodes[q];
        double weight = 0.5 * rule.weights[q];
        out += weight * (lag_operator_derivative(a + theta * hess) + (-1.0) * base);
    }
    return out;
}

DominationReport bound_domination_check(const GridField& e, const KappaForm& kappa,
                                        double t_shift, double source_radius, double r_in,
                                        double r_out) {
    kappa.validate();
    if (kappa.n() != e.grid.n)
        throw std::invalid_argument("bound_domination_check: dimension mismatch");
    DominationReport report;
    report.calibration = fit_exponential_rate(e, t_shift, r_in, r_out, ParitySelect::even);

    DecayBound bound;
    bound.kappa = kappa;
    bound.t_shift = t_shift;
    bound.s_tilde = std::max({report.calibration.fitted_s, source_radius * 1.0001, 0.0});
    bound.c_fit = 1.0;

    const SpaceTimeGrid& g = e.grid;
    std::array<double, 3> xbuf{};
    std::span<double> x(xbuf.data(), g.n);
    auto admissible = [&](std::int64_t node, std::size_t lev, double& mag, double& r) {
        mag = std::abs(e.levels[lev][node]);
        if (mag <= kErrorFloor) return false;
        g.node_coords(node, x);
        r = 0.0;
        for (int d = 0; d < g.n; ++d) r += x[d] * x[d];
        r = std::sqrt(r);
        return r >= r_in && r <= r_out;
    };
    double worst_ratio = 0.0;
    for (std::size_t lev = 0; lev < e.level_count(); ++lev) {
        if (!(e.times[lev] + t_shift > 0.0)) continue;
        for (std::int64_t node = 0; node < g.node_count(); ++node) {
            if (node_parity(g, node) != 0) continue;
            double mag, r;
            if (!admissible(node, lev, mag, r)) continue;
            double shape = eval_decay_bound(bound, x, e.times[lev]);
            if (shape > 0.0) worst_ratio = std::max(worst_ratio, mag / shape);
        }
    }
    if (!(worst_ratio > 0.0))
        throw std::runtime_error("bound_domination_check: no calibration samples");
    bound.c_fit = worst_ratio;
    report.bound = bound;

    std::int64_t dominated = 0;
    for (std::size_t lev = 0; lev < e.level_count(); ++lev) {
        if (!(e.times[lev] + t_shift > 0.0)) continue;
        for (std::int64_t node = 0; node < g.node_count(); ++node) {
            if (node_parity(g, node) != 1) continue;
            double mag, r;
            if (!admissible(node, lev, mag, r)) continue;
            ++report.holdout_samples;
            if (mag <= eval_decay_bound(bound, x, e.times[lev])) ++dominated;
        }
    }
    if (report.holdout_samples == 0)
        throw std::runtime_error("bound_domination_check: no holdout samples");
    report.holdout_fraction = static_cast<double>(dominated) / report.holdout_samples;
    return report;
}

}  // namespace lmcf
