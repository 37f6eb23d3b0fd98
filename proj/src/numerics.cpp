#include "lmcf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace lmcf {

static QuadRule make_gauss_legendre(int n) {
    // Newton iteration on Legendre roots, seeded by the Chebyshev estimate.
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return rule;
}

const QuadRule& gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
    static std::map<int, QuadRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
    return it->second;
}

double gl_integrate(const std::function<double(double)>& fn, double a, double b, int n) {
    const QuadRule& rule = gauss_legendre(n);
    const double mid = 0.5 * (a + b), halfw = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += rule.weights[i] * fn(mid + halfw * rule.nodes[i]);
    return acc * halfw;
}

double bisect(const std::function<double(double)>& fn, double lo, double hi, int max_iter) {
    double flo = fn(lo), fhi = fn(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (std::signbit(flo) == std::signbit(fhi))
        throw std::runtime_error("bisect: no sign change on the bracket");
    for (int i = 0; i < max_iter; ++i) {
        double mid = 0.5 * (lo + hi);
        double fmid = fn(mid);
        if (fmid == 0.0) return mid;
        if (std::signbit(fmid) == std::signbit(flo)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n != y_.size() || n < 2)
        throw std::invalid_argument("MonotoneCubic: need matching samples, at least two");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1]))
            throw std::invalid_argument("MonotoneCubic: mesh must strictly increase");
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    m_.assign(n, 0.0);
    m_[0] = d[0];
    m_[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            m_[i] = 0.0;
        } else {
            // Harmonic mean keeps the interpolant inside the data range.
            double w1 = 2.0 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
            double w2 = (x_[i + 1] - x_[i]) + 2.0 * (x_[i] - x_[i - 1]);
            m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    // Clamp the one-sided end slopes (Fritsch-Carlson condition).
    for (std::size_t i : {std::size_t{0}, n - 1}) {
        std::size_t seg = (i == 0) ? 0 : n - 2;
        if (d[seg] == 0.0)
            m_[i] = 0.0;
        else if (m_[i] / d[seg] < 0.0)
            m_[i] = 0.0;
        else if (std::abs(m_[i]) > 3.0 * std::abs(d[seg]))
            m_[i] = 3.0 * d[seg];
    }
}

double MonotoneCubic::operator()(double xq) const {
    if (x_.empty()) throw std::logic_error("MonotoneCubic: empty interpolant");
    if (xq <= x_.front()) return y_.front();
    if (xq >= x_.back()) return y_.back();
    auto it = std::upper_bound(x_.begin(), x_.end(), xq);
    std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    double hseg = x_[i + 1] - x_[i];
    double t = (xq - x_[i]) / hseg;
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    double h10 = t * (1 - t) * (1 - t);
    double h01 = t * t * (3 - 2 * t);
    double h11 = t * t * (t - 1);
    return h00 * y_[i] + h10 * hseg * m_[i] + h01 * y_[i + 1] + h11 * hseg * m_[i + 1];
}

std::vector<double> lsq_solve(std::span<const double> a, std::span<const double> b,
                              std::size_t cols) {
    if (cols == 0 || b.empty() || a.size() != b.size() * cols)
        throw std::invalid_argument("lsq_solve: shape mismatch");
    const std::size_t rows = b.size();
    // Normal equations: G = A^T A, rhs = A^T b.
    std::vector<double> g(cols * cols, 0.0), rhs(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a.data() + r * cols;
        for (std::size_t i = 0; i < cols; ++i) {
            rhs[i] += row[i] * b[r];
            for (std::size_t j = 0; j <= i; ++j) g[i * cols + j] += row[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = i + 1; j < cols; ++j) g[i * cols + j] = g[j * cols + i];
    // Gaussian elimination with partial pivoting.
    std::vector<std::size_t> piv(cols);
    for (std::size_t i = 0; i < cols; ++i) piv[i] = i;
    for (std::size_t k = 0; k < cols; ++k) {
        std::size_t best = k;
        for (std::size_t i = k + 1; i < cols; ++i)
            if (std::abs(g[i * cols + k]) > std::abs(g[best * cols + k])) best = i;
        if (best != k) {
            for (std::size_t j = 0; j < cols; ++j) std::swap(g[k * cols + j], g[best * cols + j]);
            std::swap(rhs[k], rhs[best]);
        }
        double pivval = g[k * cols + k];
        if (pivval == 0.0) throw std::runtime_error("lsq_solve: singular normal equations");
        for (std::size_t i = k + 1; i < cols; ++i) {
            double factor = g[i * cols + k] / pivval;
            if (factor == 0.0) continue;
            for (std::size_t j = k; j < cols; ++j) g[i * cols + j] -= factor * g[k * cols + j];
            rhs[i] -= factor * rhs[k];
        }
    }
    std::vector<double> x(cols, 0.0);
    for (std::size_t k = cols; k-- > 0;) {
        double acc = rhs[k];
        for (std::size_t j = k + 1; j < cols; ++j) acc -= g[k * cols + j] * x[j];
        x[k] = acc / g[k * cols + k];
    }
    return x;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need at least two matching samples");
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::runtime_error("fit_line: degenerate abscissae");
    LineFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0, ss_tot = 0, ym = sy / n;
    for (std::size_t i = 0; i < n; ++i) {
        double e = y[i] - (fit.slope * x[i] + fit.intercept);
        ss_res += e * e;
        ss_tot += (y[i] - ym) * (y[i] - ym);
    }
    fit.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

std::vector<double> cumulative_trapezoid(std::span<const double> x,
                                         std::span<const double> y) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("cumulative_trapezoid: shape mismatch");
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return out;
}

}  // namespace lmcf
