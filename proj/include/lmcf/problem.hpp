#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lmcf/sym_matrix.hpp"

namespace lmcf {

/// Space-time scale sqrt(1 + |x|^2 - t). Requires t <= 0.
double r_scale(std::span<const double> x, double t);

/// Quadratic profile q(x, t) = tau t + x'Ax/2 + b.x + c whose drift tau is
/// tied to the curvature matrix: tau = lag_operator(a), fixed at construction.
struct QuadraticProfile {
    SymMatrix a;
    std::vector<double> b;
    double c = 0.0;
    double tau = 0.0;

    QuadraticProfile(SymMatrix a_in, std::vector<double> b_in, double c_in);
    int dim() const { return a.dim(); }
    double eval(std::span<const double> x, double t) const;
};

double eval_quadratic(const QuadraticProfile& q, std::span<const double> x, double t);

enum class ForcingKind { zero, compact_bump, algebraic_decay, tabulated };

/// Forcing term f(x, t) for t <= 0. The compact kinds vanish exactly outside
/// |x| < support_radius or t <= -support_time; the algebraic kind decays like
/// amplitude * r_scale^(-beta).
struct Forcing {
    ForcingKind kind = ForcingKind::zero;
    int n = 1;
    double amplitude = 0.0;

    // compact_bump: C-infinity bump amplitude*phi(|x-center|/radius)*phi(2t/t_width+1)
    // with phi(r) = exp(1 - 1/(1 - r^2)) inside |r| < 1, zero outside.
    std::vector<double> center;
    double radius = 1.0;
    double t_width = 1.0;

    // algebraic_decay: amplitude * (1 + |x|^2 - t)^(-beta/2).
    double beta = 3.0;

    // tabulated: uniform box [-table_radius, table_radius]^n sampled with
    // spacing table_h at the listed times; multilinear interpolation inside,
    // zero outside the box or the time range.
    double table_radius = 0.0;
    double table_h = 1.0;
    std::vector<double> table_times;
    std::vector<std::vector<double>> table_values;

    static Forcing zero(int n);
    static Forcing compact_bump(std::vector<double> center, double radius,
                                double amplitude, double t_width);
    static Forcing algebraic_decay(int n, double beta, double amplitude);
    static Forcing tabulated(int n, double table_radius, double table_h,
                             std::vector<double> times,
                             std::vector<std::vector<double>> values);

    bool compact() const { return kind != ForcingKind::algebraic_decay; }
    double support_time() const;
    double support_radius() const;
    double sup_abs() const;
    void validate() const;
};

double eval_forcing(const Forcing& f, std::span<const double> x, double t);

/// Uniform tensor grid on [-radius, radius]^n marched from t_start to t_end
/// with step dt. Nodes are ordered lexicographically by multi-index with the
/// last axis fastest; this ordering is part of the file-format contract.
struct SpaceTimeGrid {
    int n = 1;
    double radius = 1.0;
    double h = 0.1;
    double t_start = -1.0;
    double t_end = 0.0;
    double dt = 1e-3;

    int points_per_axis() const;
    std::int64_t node_count() const;
    int steps() const;
    double cfl_bound() const { return h * h / (2.0 * n); }
    double coordinate(int axis_index) const { return -radius + axis_index * h; }

    std::array<int, 3> unpack(std::int64_t node) const;
    std::int64_t pack(std::span<const int> idx) const;
    void node_coords(std::int64_t node, std::span<double> out) const;
    bool is_boundary(std::int64_t node) const;

    /// Throws std::invalid_argument on malformed extents, a non-integer
    /// point count, a CFL violation (message names the bound), or a node
    /// count beyond the in-memory budget.
    void validate() const;
};

/// Field values on the spatial nodes of a grid at one or more stored times.
struct GridField {
    SpaceTimeGrid grid;
    std::vector<double> times;
    std::vector<std::vector<double>> levels;

    GridField() = default;
    explicit GridField(SpaceTimeGrid g) : grid(g) {}
    std::size_t level_count() const { return levels.size(); }
    void add_level(double t, std::vector<double> values);
    double value(std::size_t level, std::int64_t node) const { return levels[level][node]; }
};

/// Samples q on the grid's nodes at time t.
std::vector<double> sample_quadratic(const SpaceTimeGrid& g, const QuadraticProfile& q,
                                     double t);

}  // namespace lmcf
