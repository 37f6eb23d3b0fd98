#include "lmcf/sym_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lmcf {

SymMatrix::SymMatrix(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("SymMatrix: dimension must be in [1, 8], got " +
                                    std::to_string(dim));
}

std::size_t SymMatrix::tri_index(int i, int j) const {
    if (i < 0 || j < 0 || i >= dim_ || j >= dim_)
        throw std::out_of_range("SymMatrix: index out of range");
    if (j > i) std::swap(i, j);
    return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
}

SymMatrix SymMatrix::identity(int dim) {
    SymMatrix m(dim);
    for (int i = 0; i < dim; ++i) m.set(i, i, 1.0);
    return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> entries) {
    SymMatrix m(static_cast<int>(entries.size()));
    for (int i = 0; i < m.dim(); ++i) m.set(i, i, entries[i]);
    return m;
}

SymMatrix SymMatrix::from_dense(std::span<const double> dense, int dim) {
    if (dense.size() != static_cast<std::size_t>(dim) * dim)
        throw std::invalid_argument("SymMatrix::from_dense: size mismatch");
    SymMatrix m(dim);
    double scale = 0.0;
    for (double v : dense) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j <= i; ++j) {
            double lo = dense[static_cast<std::size_t>(i) * dim + j];
            double hi = dense[static_cast<std::size_t>(j) * dim + i];
            if (std::abs(lo - hi) > 1e-12 * (1.0 + scale))
                throw std::invalid_argument("SymMatrix::from_dense: matrix not symmetric");
            m.set(i, j, 0.5 * (lo + hi));
        }
    return m;
}

double SymMatrix::max_abs() const {
    double out = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j <= i; ++j) out = std::max(out, std::abs((*this)(i, j)));
    return out;
}

double SymMatrix::frobenius_norm() const {
    double acc = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) acc += (*this)(i, j) * (*this)(i, j);
    return std::sqrt(acc);
}

bool SymMatrix::all_finite() const {
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j <= i; ++j)
            if (!std::isfinite((*this)(i, j))) return false;
    return true;
}

void SymMatrix::require_finite(const char* who) const {
    if (!all_finite())
        throw std::invalid_argument(std::string(who) + ": matrix has non-finite entries");
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
    if (other.dim_ != dim_) throw std::invalid_argument("SymMatrix: dimension mismatch");
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j <= i; ++j) add(i, j, other(i, j));
    return *this;
}

SymMatrix& SymMatrix::operator*=(double scale) {
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j <= i; ++j) set(i, j, (*this)(i, j) * scale);
    return *this;
}

namespace {

double off_diagonal_norm(const double* a, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) acc += a[i * n + j] * a[i * n + j];
    return std::sqrt(acc);
}

}  // namespace

EigenDecomposition eigh(const SymMatrix& m) {
    m.require_finite("eigh");
    const int n = m.dim();
    // Work on a dense copy; rotations accumulate into q (row-major here).
    std::array<double, SymMatrix::kMaxDim * SymMatrix::kMaxDim> a{}, q{};
    for (int i = 0; i < n; ++i) {
        q[i * n + i] = 1.0;
        for (int j = 0; j < n; ++j) a[i * n + j] = m(i, j);
    }
    const double tol = 1e-14 * std::max(m.frobenius_norm(), 1e-300);
    for (int sweep = 0; sweep < 100 && off_diagonal_norm(a.data(), n) > tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int r = p + 1; r < n; ++r) {
                double apr = a[p * n + r];
                if (apr == 0.0) continue;
                double app = a[p * n + p], arr = a[r * n + r];
                double theta = 0.5 * (arr - app) / apr;
                double t = std::copysign(1.0, theta) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a[k * n + p], akr = a[k * n + r];
                    a[k * n + p] = c * akp - s * akr;
                    a[k * n + r] = s * akp + c * akr;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a[p * n + k], ark = a[r * n + k];
                    a[p * n + k] = c * apk - s * ark;
                    a[r * n + k] = s * apk + c * ark;
                }
                a[p * n + r] = a[r * n + p] = 0.0;
                for (int k = 0; k < n; ++k) {
                    double qkp = q[k * n + p], qkr = q[k * n + r];
                    q[k * n + p] = c * qkp - s * qkr;
                    q[k * n + r] = s * qkp + c * qkr;
                }
            }
        }
    }
    std::array<int, SymMatrix::kMaxDim> order;
    std::iota(order.begin(), order.begin() + n, 0);
    std::stable_sort(order.begin(), order.begin() + n,
                     [&](int i, int j) { return a[i * n + i] < a[j * n + j]; });
    EigenDecomposition out;
    out.dim = n;
    out.values.resize(n);
    out.vectors.resize(static_cast<std::size_t>(n) * n);
    for (int k = 0; k < n; ++k) {
        out.values[k] = a[order[k] * n + order[k]];
        for (int row = 0; row < n; ++row) out.vectors[k * n + row] = q[row * n + order[k]];
    }
    return out;
}

double lag_operator(const SymMatrix& m) {
    m.require_finite("lag_operator");
    const int n = m.dim();
    // Jacobi without eigenvector accumulation; stack-only so grid hot loops
    // stay allocation-free.
    std::array<double, SymMatrix::kMaxDim * SymMatrix::kMaxDim> a{};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[i * n + j] = m(i, j);
    const double tol = 1e-14 * std::max(m.frobenius_norm(), 1e-300);
    for (int sweep = 0; sweep < 100 && off_diagonal_norm(a.data(), n) > tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int r = p + 1; r < n; ++r) {
                double apr = a[p * n + r];
                if (apr == 0.0) continue;
                double theta = 0.5 * (a[r * n + r] - a[p * n + p]) / apr;
                double t = std::copysign(1.0, theta) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a[k * n + p], akr = a[k * n + r];
                    a[k * n + p] = c * akp - s * akr;
                    a[k * n + r] = s * akp + c * akr;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a[p * n + k], ark = a[r * n + k];
                    a[p * n + k] = c * apk - s * ark;
                    a[r * n + k] = s * apk + c * ark;
                }
                a[p * n + r] = a[r * n + p] = 0.0;
            }
        }
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::atan(a[i * n + i]);
    return acc;
}

SymMatrix lag_operator_derivative(const SymMatrix& m) {
    EigenDecomposition eig = eigh(m);
    const int n = m.dim();
    SymMatrix out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) {
                double w = 1.0 / (1.0 + eig.values[k] * eig.values[k]);
                acc += eig.vector(i, k) * w * eig.vector(j, k);
            }
            out.set(i, j, acc);
        }
    return out;
}

}  // namespace lmcf
