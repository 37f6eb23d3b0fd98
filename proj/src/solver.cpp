#include "lmcf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lmcf {

double BarrierBoundary::eval_u(std::span<const double> x, double t) const {
    const ThetaParams& p = profile.params;
    const int n = p.n();
    if (static_cast<int>(x.size()) != n)
        throw std::invalid_argument("BarrierBoundary: point size mismatch");
    std::array<double, SymMatrix::kMaxDim> y{};
    for (int col = 0; col < n; ++col) {
        double acc = 0.0;
        for (int row = 0; row < n; ++row) acc += frame[col * n + row] * x[row];
        y[col] = acc;
    }
    double norm2 = 0.0, lin = 0.0;
    for (int i = 0; i < n; ++i) {
        norm2 += x[i] * x[i];
        lin += b[i] * x[i];
    }
    double v = profile.eval_v(barrier_s(p, std::span<const double>(y.data(), n), t));
    return v - 0.5 * p.k_shift * norm2 + p.theta * t + lin + c;
}

void SolverConfig::validate() const {
    grid.validate();
    if (quadratic.dim() != grid.n)
        throw std::invalid_argument("SolverConfig: quadratic dimension mismatch");
    if (!(cfl_safety > 0.0) || cfl_safety > 1.0)
        throw std::invalid_argument("SolverConfig: cfl_safety must be in (0, 1]");
    if (grid.dt > cfl_safety * grid.cfl_bound() * (1.0 + 1e-12))
        throw std::invalid_argument("SolverConfig: dt exceeds cfl_safety * h^2/(2n) = " +
                                    std::to_string(cfl_safety * grid.cfl_bound()));
    if (initial.level_count() != 1)
        throw std::invalid_argument("SolverConfig: initial data must hold exactly one level");
    if (std::abs(initial.times[0] - grid.t_start) > 1e-12 * std::max(1.0, -grid.t_start))
        throw std::invalid_argument("SolverConfig: initial data must sit at t_start");
    if (static_cast<std::int64_t>(initial.levels[0].size()) != grid.node_count())
        throw std::invalid_argument("SolverConfig: initial data size mismatch");
    if (boundary != BoundaryRule::quadratic_exact && !barrier.has_value())
        throw std::invalid_argument("SolverConfig: barrier boundary requested without a barrier");
    if (barrier && static_cast<int>(barrier->b.size()) != grid.n)
        throw std::invalid_argument("SolverConfig: barrier linear term size mismatch");
    for (double ts : snapshot_times)
        if (ts < grid.t_start - 1e-12 || ts > grid.t_end + 1e-12)
            throw std::invalid_argument("SolverConfig: snapshot time outside the window");
}

double SolverConfig::boundary_value(std::span<const double> x, double t) const {
    switch (boundary) {
        case BoundaryRule::quadratic_exact: return quadratic.eval(x, t);
        case BoundaryRule::barrier_sub:
        case BoundaryRule::barrier_super: return barrier->eval_u(x, t);
    }
    return 0.0;
}

SymMatrix hessian_at(const GridField& u, std::size_t level, std::span<const int> node) {
    const SpaceTimeGrid& g = u.grid;
    if (level >= u.level_count()) throw std::invalid_argument("hessian_at: level out of range");
    if (static_cast<int>(node.size()) != g.n)
        throw std::invalid_argument("hessian_at: node size mismatch");
    const int p = g.points_per_axis();
    for (int d = 0; d < g.n; ++d)
        if (node[d] < 1 || node[d] > p - 2)
            throw std::invalid_argument("hessian_at: node must be strictly interior");
    const std::vector<double>& vals = u.levels[level];
    // Strides of the lexicographic ordering (last axis fastest).
    std::array<std::int64_t, 3> stride{};
    stride[g.n - 1] = 1;
    for (int d = g.n - 2; d >= 0; --d) stride[d] = stride[d + 1] * p;
    std::int64_t base = g.pack(node);
    const double h2 = g.h * g.h;
    SymMatrix hess(g.n);
    for (int i = 0; i < g.n; ++i) {
        double center = vals[base];
        hess.set(i, i,
                 (vals[base + stride[i]] - 2.0 * center + vals[base - stride[i]]) / h2);
        for (int j = 0; j < i; ++j) {
            double cross = vals[base + stride[i] + stride[j]] + vals[base - stride[i] - stride[j]] -
                           vals[base + stride[i] - stride[j]] - vals[base - stride[i] + stride[j]];
            hess.set(i, j, cross / (4.0 * h2));
        }
    }
    return hess;
}

namespace {

// Shared marching kernel: fills `next` at time t + dt from `cur` at time t.
void advance(const SolverConfig& cfg, const Forcing& f, const std::vector<double>& cur,
             std::vector<double>& next, double t, double dt) {
    const SpaceTimeGrid& g = cfg.grid;
    const int n = g.n;
    const int p = g.points_per_axis();
    const double h2 = g.h * g.h;
    std::array<std::int64_t, 3> stride{};
    stride[n - 1] = 1;
    for (int d = n - 2; d >= 0; --d) stride[d] = stride[d + 1] * p;
    std::array<double, 3> xbuf{};
    std::span<double> x(xbuf.data(), n);
    std::array<int, 3> idx{};

    const std::int64_t count = g.node_count();
    for (std::int64_t node = 0; node < count; ++node) {
        // Unpack incrementally: cheaper than div/mod per node.
        if (node == 0)
            idx.fill(0);
        else {
            int d = n - 1;
            while (++idx[d] == p) {
                idx[d] = 0;
                --d;
            }
        }
        bool boundary = false;
        for (int d = 0; d < n; ++d)
            if (idx[d] == 0 || idx[d] == p - 1) {
                boundary = true;
                break;
            }
        for (int d = 0; d < n; ++d) x[d] = g.coordinate(idx[d]);
        if (boundary) {
            next[node] = cfg.boundary_value(x, t + dt);
            continue;
        }
        SymMatrix hess(n);
        const double center = cur[node];
        for (int i = 0; i < n; ++i) {
            hess.set(i, i, (cur[node + stride[i]] - 2.0 * center + cur[node - stride[i]]) / h2);
            for (int j = 0; j < i; ++j) {
                double cross = cur[node + stride[i] + stride[j]] +
                               cur[node - stride[i] - stride[j]] -
                               cur[node + stride[i] - stride[j]] -
                               cur[node - stride[i] + stride[j]];
                hess.set(i, j, cross / (4.0 * h2));
            }
        }
        double value = center + dt * (lag_operator(hess) + eval_forcing(f, x, t));
        if (!std::isfinite(value)) {
            std::string where = "(";
            for (int d = 0; d < n; ++d) where += std::to_string(idx[d]) + (d + 1 < n ? "," : ")");
            throw std::runtime_error("solver: divergence at node " + where + ", t = " +
                                     std::to_string(t));
        }
        next[node] = value;
    }
}

}  // namespace

GridField step(const GridField& u, const Forcing& f, const SolverConfig& cfg) {
    cfg.validate();
    if (u.level_count() != 1) throw std::invalid_argument("step: field must hold one level");
    if (static_cast<std::int64_t>(u.levels[0].size()) != cfg.grid.node_count())
        throw std::invalid_argument("step: field size mismatch");
    if (f.n != cfg.grid.n) throw std::invalid_argument("step: forcing dimension mismatch");
    GridField out(cfg.grid);
    std::vector<double> next(u.levels[0].size());
    advance(cfg, f, u.levels[0], next, u.times[0], cfg.grid.dt);
    out.add_level(u.times[0] + cfg.grid.dt, std::move(next));
    return out;
}

GridField solve(const SolverConfig& cfg, const Forcing& f, double* max_update) {
    cfg.validate();
    if (f.n != cfg.grid.n) throw std::invalid_argument("solve: forcing dimension mismatch");
    const SpaceTimeGrid& g = cfg.grid;
    const int steps = g.steps();
    const double dt = (g.t_end - g.t_start) / steps;

    // Snapshot step indices (deduplicated, final step always kept).
    std::vector<int> snap_steps;
    for (double ts : cfg.snapshot_times)
        snap_steps.push_back(std::clamp(static_cast<int>(std::llround((ts - g.t_start) / dt)),
                                        0, steps));
    snap_steps.push_back(steps);
    std::sort(snap_steps.begin(), snap_steps.end());
    snap_steps.erase(std::unique(snap_steps.begin(), snap_steps.end()), snap_steps.end());

    GridField out(g);
    std::vector<double> cur = cfg.initial.levels[0];
    std::vector<double> next(cur.size());
    double worst = 0.0;
    auto maybe_snapshot = [&](int k, const std::vector<double>& vals) {
        if (std::binary_search(snap_steps.begin(), snap_steps.end(), k))
            out.add_level(g.t_start + k * dt, vals);
    };
    maybe_snapshot(0, cur);
    for (int k = 0; k < steps; ++k) {
        double t = g.t_start + k * dt;
        advance(cfg, f, cur, next, t, dt);
        if (max_update) {
            for (std::size_t i = 0; i < cur.size(); ++i)
                worst = std::max(worst, std::abs(next[i] - cur[i]));
        }
        cur.swap(next);
        maybe_snapshot(k + 1, cur);
    }
    if (max_update) *max_update = worst;
    return out;
}

}  // namespace lmcf
