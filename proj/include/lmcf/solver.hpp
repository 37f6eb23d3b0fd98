#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lmcf/barriers.hpp"
#include "lmcf/problem.hpp"

namespace lmcf {

enum class BoundaryRule { quadratic_exact, barrier_sub, barrier_super };

/// Barrier expressed in solution coordinates: the profile lives in the
/// eigenframe of the curvature matrix after the positivity and drift shifts,
/// so u(x, t) = V(s(Q'x, t)) - K|x|^2/2 + theta t + b.x + c.
struct BarrierBoundary {
    BarrierProfile profile;
    std::vector<double> frame;  // column-major eigenvector matrix Q
    std::vector<double> b;
    double c = 0.0;

    double eval_u(std::span<const double> x, double t) const;
};

/// Explicit forward Euler marching configuration. `initial` holds exactly one
/// level at grid.t_start; snapshot_times are matched to the nearest step and
/// the final time is always stored.
struct SolverConfig {
    SpaceTimeGrid grid;
    QuadraticProfile quadratic;
    BoundaryRule boundary = BoundaryRule::quadratic_exact;
    GridField initial;
    double cfl_safety = 0.9;
    std::vector<double> snapshot_times;
    std::optional<BarrierBoundary> barrier;

    void validate() const;
    double boundary_value(std::span<const double> x, double t) const;
};

/// Second-difference Hessian at a strictly interior node: centered second
/// differences on the diagonal, the symmetric four-point cross stencil off
/// it. Exact on quadratics.
SymMatrix hessian_at(const GridField& u, std::size_t level, std::span<const int> node);

/// One forward Euler step of u_t = sum_i arctan(lambda_i(D^2 u)) + f from the
/// single stored level; boundary values come from the configured rule at the
/// advanced time. Throws std::runtime_error naming the node on a non-finite
/// update.
GridField step(const GridField& u, const Forcing& f, const SolverConfig& cfg);

/// Marches from t_start to t_end, returning the requested snapshots.
/// `max_update` (if given) receives the largest per-step change, a cheap
/// stability diagnostic.
GridField solve(const SolverConfig& cfg, const Forcing& f, double* max_update = nullptr);

}  // namespace lmcf
