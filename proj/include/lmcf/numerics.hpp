#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace lmcf {

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Returns the n-point Gauss-Legendre rule; results are cached per order.
const QuadRule& gauss_legendre(int n);

/// Integrates fn over [a, b] with a single n-point Gauss-Legendre rule.
double gl_integrate(const std::function<double(double)>& fn, double a, double b, int n);

/// Root of fn on [lo, hi] by bisection. Requires a sign change on the bracket;
/// throws std::runtime_error otherwise. Runs max_iter halvings.
double bisect(const std::function<double(double)>& fn, double lo, double hi,
              int max_iter = 60);

/// Shape-preserving cubic interpolant (Fritsch-Carlson) on a strictly
/// increasing mesh. Evaluation outside the mesh clamps to the end values.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y);
    double operator()(double xq) const;
    bool empty() const { return x_.empty(); }

private:
    std::vector<double> x_, y_, m_;  // mesh, values, endpoint slopes
};

/// Least-squares solution of A x = b via normal equations with partial
/// pivoting. `a` is row-major with `cols` columns; returns x (size cols).
std::vector<double> lsq_solve(std::span<const double> a, std::span<const double> b,
                              std::size_t cols);

/// Straight-line fit y = slope x + intercept plus the coefficient of
/// determination of the fit.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Cumulative trapezoid integral of (x, y) samples; out[0] = 0.
std::vector<double> cumulative_trapezoid(std::span<const double> x,
                                         std::span<const double> y);

}  // namespace lmcf
