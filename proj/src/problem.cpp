#include "lmcf/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lmcf {

double r_scale(std::span<const double> x, double t) {
    if (t > 0.0) throw std::invalid_argument("r_scale: requires t <= 0");
    double acc = 1.0 - t;
    for (double xi : x) acc += xi * xi;
    return std::sqrt(acc);
}

QuadraticProfile::QuadraticProfile(SymMatrix a_in, std::vector<double> b_in, double c_in)
    : a(a_in), b(std::move(b_in)), c(c_in) {
    a.require_finite("QuadraticProfile");
    if (static_cast<int>(b.size()) != a.dim())
        throw std::invalid_argument("QuadraticProfile: linear term size mismatch");
    for (double v : b)
        if (!std::isfinite(v)) throw std::invalid_argument("QuadraticProfile: non-finite b");
    if (!std::isfinite(c)) throw std::invalid_argument("QuadraticProfile: non-finite c");
    tau = lag_operator(a);
}

double QuadraticProfile::eval(std::span<const double> x, double t) const {
    const int n = dim();
    if (static_cast<int>(x.size()) != n)
        throw std::invalid_argument("QuadraticProfile::eval: point size mismatch");
    double quad = 0.0, lin = 0.0;
    for (int i = 0; i < n; ++i) {
        lin += b[i] * x[i];
        for (int j = 0; j < n; ++j) quad += x[i] * a(i, j) * x[j];
    }
    return tau * t + 0.5 * quad + lin + c;
}

double eval_quadratic(const QuadraticProfile& q, std::span<const double> x, double t) {
    return q.eval(x, t);
}

namespace {

// C-infinity cutoff: 1 at r = 0, identically 0 for |r| >= 1.
double bump_cutoff(double r) {
    double r2 = r * r;
    if (r2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - r2));
}

}  // namespace

Forcing Forcing::zero(int n) {
    Forcing f;
    f.kind = ForcingKind::zero;
    f.n = n;
    f.validate();
    return f;
}

Forcing Forcing::compact_bump(std::vector<double> center, double radius, double amplitude,
                              double t_width) {
    Forcing f;
    f.kind = ForcingKind::compact_bump;
    f.n = static_cast<int>(center.size());
    f.center = std::move(center);
    f.radius = radius;
    f.amplitude = amplitude;
    f.t_width = t_width;
    f.validate();
    return f;
}

Forcing Forcing::algebraic_decay(int n, double beta, double amplitude) {
    Forcing f;
    f.kind = ForcingKind::algebraic_decay;
    f.n = n;
    f.beta = beta;
    f.amplitude = amplitude;
    f.validate();
    return f;
}

Forcing Forcing::tabulated(int n, double table_radius, double table_h,
                           std::vector<double> times,
                           std::vector<std::vector<double>> values) {
    Forcing f;
    f.kind = ForcingKind::tabulated;
    f.n = n;
    f.table_radius = table_radius;
    f.table_h = table_h;
    f.table_times = std::move(times);
    f.table_values = std::move(values);
    f.validate();
    return f;
}

double Forcing::support_time() const {
    switch (kind) {
        case ForcingKind::zero: return 0.0;
        case ForcingKind::compact_bump: return t_width;
        case ForcingKind::algebraic_decay: return std::numeric_limits<double>::infinity();
        case ForcingKind::tabulated:
            return table_times.empty() ? 0.0 : -table_times.front();
    }
    return 0.0;
}

double Forcing::support_radius() const {
    switch (kind) {
        case ForcingKind::zero: return 0.0;
        case ForcingKind::compact_bump: {
            double norm = 0.0;
            for (double ci : center) norm += ci * ci;
            return std::sqrt(norm) + radius;
        }
        case ForcingKind::algebraic_decay: return std::numeric_limits<double>::infinity();
        case ForcingKind::tabulated: return table_radius * std::sqrt(double(n));
    }
    return 0.0;
}

double Forcing::sup_abs() const {
    switch (kind) {
        case ForcingKind::zero: return 0.0;
        case ForcingKind::compact_bump: return std::abs(amplitude);
        case ForcingKind::algebraic_decay: return std::abs(amplitude);
        case ForcingKind::tabulated: {
            double m = 0.0;
            for (const auto& level : table_values)
                for (double v : level) m = std::max(m, std::abs(v));
            return m;
        }
    }
    return 0.0;
}

void Forcing::validate() const {
    if (n < 1 || n > SymMatrix::kMaxDim)
        throw std::invalid_argument("Forcing: dimension out of range");
    if (!std::isfinite(amplitude)) throw std::invalid_argument("Forcing: non-finite amplitude");
    switch (kind) {
        case ForcingKind::zero:
            break;
        case ForcingKind::compact_bump:
            if (static_cast<int>(center.size()) != n)
                throw std::invalid_argument("Forcing: bump center size mismatch");
            if (!(radius > 0.0) || !(t_width > 0.0))
                throw std::invalid_argument("Forcing: bump extents must be positive");
            break;
        case ForcingKind::algebraic_decay:
            if (!(beta > 2.0))
                throw std::invalid_argument("Forcing: decay exponent must exceed 2");
            break;
        case ForcingKind::tabulated: {
            if (!(table_radius > 0.0) || !(table_h > 0.0))
                throw std::invalid_argument("Forcing: table extents must be positive");
            if (table_times.size() != table_values.size() || table_times.empty())
                throw std::invalid_argument("Forcing: table levels mismatch");
            for (std::size_t i = 1; i < table_times.size(); ++i)
                if (!(table_times[i] > table_times[i - 1]))
                    throw std::invalid_argument("Forcing: table times must increase");
            if (table_times.back() > 0.0)
                throw std::invalid_argument("Forcing: table times must not be positive");
            int p = static_cast<int>(std::round(2.0 * table_radius / table_h)) + 1;
            std::size_t expect = 1;
            for (int d = 0; d < n; ++d) expect *= static_cast<std::size_t>(p);
            for (const auto& level : table_values)
                if (level.size() != expect)
                    throw std::invalid_argument("Forcing: table level size mismatch");
            break;
        }
    }
    if (!std::isfinite(sup_abs())) throw std::invalid_argument("Forcing: unbounded values");
}

namespace {

double eval_tabulated(const Forcing& f, std::span<const double> x, double t) {
    if (t < f.table_times.front() || t > f.table_times.back()) return 0.0;
    const int p = static_cast<int>(std::round(2.0 * f.table_radius / f.table_h)) + 1;
    // Multilinear weights per axis; outside the box the forcing is zero.
    std::array<int, SymMatrix::kMaxDim> base{};
    std::array<double, SymMatrix::kMaxDim> frac{};
    for (int d = 0; d < f.n; ++d) {
        double s = (x[d] + f.table_radius) / f.table_h;
        if (s < 0.0 || s > p - 1) return 0.0;
        int i = std::min(static_cast<int>(s), p - 2 >= 0 ? p - 2 : 0);
        base[d] = i;
        frac[d] = s - i;
    }
    auto sample_level = [&](const std::vector<double>& level) {
        double acc = 0.0;
        for (int corner = 0; corner < (1 << f.n); ++corner) {
            double w = 1.0;
            std::size_t idx = 0;
            for (int d = 0; d < f.n; ++d) {
                int bit = (corner >> d) & 1;
                w *= bit ? frac[d] : 1.0 - frac[d];
                idx = idx * p + static_cast<std::size_t>(base[d] + bit);
            }
            acc += w * level[idx];
        }
        return acc;
    };
    auto it = std::upper_bound(f.table_times.begin(), f.table_times.end(), t);
    std::size_t k = static_cast<std::size_t>(it - f.table_times.begin());
    if (k == 0) k = 1;
    if (k == f.table_times.size()) k = f.table_times.size() - 1;
    double t0 = f.table_times[k - 1], t1 = f.table_times[k];
    double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * sample_level(f.table_values[k - 1]) + w * sample_level(f.table_values[k]);
}

}  // namespace

double eval_forcing(const Forcing& f, std::span<const double> x, double t) {
    if (static_cast<int>(x.size()) != f.n)
        throw std::invalid_argument("eval_forcing: point size mismatch");
    switch (f.kind) {
        case ForcingKind::zero:
            return 0.0;
        case ForcingKind::compact_bump: {
            double d2 = 0.0;
            for (int i = 0; i < f.n; ++i) {
                double di = x[i] - f.center[i];
                d2 += di * di;
            }
            double spatial = bump_cutoff(std::sqrt(d2) / f.radius);
            if (spatial == 0.0) return 0.0;
            return f.amplitude * spatial * bump_cutoff(2.0 * t / f.t_width + 1.0);
        }
        case ForcingKind::algebraic_decay: {
            double scale = r_scale(x, t);
            return f.amplitude * std::pow(scale, -f.beta);
        }
        case ForcingKind::tabulated:
            return eval_tabulated(f, x, t);
    }
    return 0.0;
}

int SpaceTimeGrid::points_per_axis() const {
    return static_cast<int>(std::round(2.0 * radius / h)) + 1;
}

std::int64_t SpaceTimeGrid::node_count() const {
    std::int64_t count = 1;
    for (int d = 0; d < n; ++d) count *= points_per_axis();
    return count;
}

int SpaceTimeGrid::steps() const {
    return static_cast<int>(std::ceil((t_end - t_start) / dt - 1e-9));
}

std::array<int, 3> SpaceTimeGrid::unpack(std::int64_t node) const {
    std::array<int, 3> idx{};
    const int p = points_per_axis();
    for (int d = n - 1; d >= 0; --d) {
        idx[d] = static_cast<int>(node % p);
        node /= p;
    }
    return idx;
}

std::int64_t SpaceTimeGrid::pack(std::span<const int> idx) const {
    const int p = points_per_axis();
    std::int64_t node = 0;
    for (int d = 0; d < n; ++d) {
        if (idx[d] < 0 || idx[d] >= p) throw std::out_of_range("SpaceTimeGrid: index out of range");
        node = node * p + idx[d];
    }
    return node;
}

void SpaceTimeGrid::node_coords(std::int64_t node, std::span<double> out) const {
    auto idx = unpack(node);
    for (int d = 0; d < n; ++d) out[d] = coordinate(idx[d]);
}

bool SpaceTimeGrid::is_boundary(std::int64_t node) const {
    auto idx = unpack(node);
    const int p = points_per_axis();
    for (int d = 0; d < n; ++d)
        if (idx[d] == 0 || idx[d] == p - 1) return true;
    return false;
}

void SpaceTimeGrid::validate() const {
    if (n < 1 || n > 3) throw std::invalid_argument("SpaceTimeGrid: n must be 1, 2, or 3");
    if (!(radius > 0.0) || !(h > 0.0))
        throw std::invalid_argument("SpaceTimeGrid: extents must be positive");
    double ratio = 2.0 * radius / h;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("SpaceTimeGrid: 2*radius/h must be an integer");
    if (!(t_start < t_end) || t_end > 0.0)
        throw std::invalid_argument("SpaceTimeGrid: need t_start < t_end <= 0");
    if (!(dt > 0.0)) throw std::invalid_argument("SpaceTimeGrid: dt must be positive");
    if (dt > cfl_bound() * (1.0 + 1e-12))
        throw std::invalid_argument("SpaceTimeGrid: dt " + std::to_string(dt) +
                                    " violates the CFL bound h^2/(2n) = " +
                                    std::to_string(cfl_bound()));
    if (node_count() > (std::int64_t{1} << 24))
        throw std::invalid_argument("SpaceTimeGrid: node count exceeds the in-memory budget");
}

void GridField::add_level(double t, std::vector<double> values) {
    if (static_cast<std::int64_t>(values.size()) != grid.node_count())
        throw std::invalid_argument("GridField: level size mismatch");
    if (!times.empty() && t <= times.back())
        throw std::invalid_argument("GridField: level times must increase");
    times.push_back(t);
    levels.push_back(std::move(values));
}

std::vector<double> sample_quadratic(const SpaceTimeGrid& g, const QuadraticProfile& q,
                                     double t) {
    if (q.dim() != g.n) throw std::invalid_argument("sample_quadratic: dimension mismatch");
    std::vector<double> out(static_cast<std::size_t>(g.node_count()));
    std::array<double, 3> xbuf{};
    std::span<double> x(xbuf.data(), g.n);
    for (std::int64_t node = 0; node < g.node_count(); ++node) {
        g.node_coords(node, x);
        out[static_cast<std::size_t>(node)] = q.eval(x, t);
    }
    return out;
}

}  // namespace lmcf
