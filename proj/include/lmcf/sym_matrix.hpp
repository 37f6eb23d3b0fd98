#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace lmcf {

/// Dense symmetric matrix of dimension 1..8 storing the lower triangle
/// row-major. Small fixed capacity keeps grid hot loops allocation-free.
class SymMatrix {
public:
    static constexpr int kMaxDim = 8;

    explicit SymMatrix(int dim);
    static SymMatrix identity(int dim);
    static SymMatrix diagonal(std::span<const double> entries);
    /// Builds from a full row-major matrix; requires symmetry to 1e-12 scale.
    static SymMatrix from_dense(std::span<const double> dense, int dim);

    int dim() const { return dim_; }
    double operator()(int i, int j) const { return tri_[tri_index(i, j)]; }
    void set(int i, int j, double value) { tri_[tri_index(i, j)] = value; }
    void add(int i, int j, double value) { tri_[tri_index(i, j)] += value; }

    double max_abs() const;
    double frobenius_norm() const;
    bool all_finite() const;
    /// Throws std::invalid_argument when entries are not finite.
    void require_finite(const char* who) const;

    SymMatrix& operator+=(const SymMatrix& other);
    SymMatrix& operator*=(double scale);
    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
    friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
    friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

private:
    std::size_t tri_index(int i, int j) const;
    int dim_;
    std::array<double, kMaxDim*(kMaxDim + 1) / 2> tri_{};
};

/// Eigenvalues ascending with matching orthonormal eigenvectors; column k of
/// `vectors` (stored column-major, dim x dim) pairs with `values[k]`.
struct EigenDecomposition {
    std::vector<double> values;
    std::vector<double> vectors;
    int dim = 0;
    double vector(int row, int col) const { return vectors[col * dim + row]; }
};

/// Full symmetric eigendecomposition by cyclic Jacobi rotations; sweeps stop
/// once the off-diagonal Frobenius norm falls below 1e-14 * ||M||.
EigenDecomposition eigh(const SymMatrix& m);

/// Sum of arctangents of the eigenvalues. Range (-dim*pi/2, dim*pi/2), and
/// monotone under the positive-semidefinite order.
double lag_operator(const SymMatrix& m);

/// Derivative (I + M^2)^{-1} of the arctangent sum, formed in the eigenbasis.
/// Symmetric positive definite with spectrum in (0, 1].
SymMatrix lag_operator_derivative(const SymMatrix& m);

}  // namespace lmcf
