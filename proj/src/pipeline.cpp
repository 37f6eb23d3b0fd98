#include "lmcf/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "lmcf/kernels.hpp"
#include "lmcf/snapshot_io.hpp"

namespace lmcf {

namespace {

using nlohmann::json;

json matrix_to_json(const SymMatrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.dim(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

/// I + A^2 assembled in the eigenbasis of A.
SymMatrix kappa_target(const SymMatrix& a) {
    EigenDecomposition eig = eigh(a);
    SymMatrix out(a.dim());
    for (int i = 0; i < a.dim(); ++i)
        for (int j = i; j < a.dim(); ++j) {
            double acc = 0.0;
            for (int k = 0; k < a.dim(); ++k)
                acc += eig.vector(i, k) * (1.0 + eig.values[k] * eig.values[k]) *
                       eig.vector(j, k);
            out.set(i, j, acc);
        }
    return out;
}

double frobenius_gap(const SymMatrix& a, const SymMatrix& b) {
    SymMatrix d = a;
    d += (-1.0) * b;
    return d.frobenius_norm();
}

void print_check(const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] %s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
}

void report_checks(const json& checks) {
    for (const auto& item : checks.items()) {
        const json& c = item.value();
        if (!c.value("enabled", false)) continue;
        std::ostringstream detail;
        for (const auto& field : c.items()) {
            if (field.key() == "enabled" || field.key() == "pass") continue;
            detail << field.key() << '=' << field.value().dump() << ' ';
        }
        print_check(item.key().c_str(), c.value("pass", false), detail.str());
    }
}

}  // namespace

BarrierPair build_barrier_pair(const RunConfig& cfg) {
    EigenDecomposition eig = eigh(cfg.quadratic.a);
    double f_low0 = -std::max(cfg.forcing.sup_abs(), cfg.barriers.envelope_floor);
    BarrierPair pair;
    pair.params = select_theta(eig.values, cfg.quadratic.tau, cfg.barriers.beta, f_low0);
    pair.env = build_envelopes(cfg.forcing, pair.params, cfg.barriers.envelope_floor);
    pair.sub = integrate_barrier_ode(pair.params, pair.env, BarrierBranch::sub,
                                     cfg.barriers.w0, cfg.barriers.s_max);
    pair.super = integrate_barrier_ode(pair.params, pair.env, BarrierBranch::super,
                                       cfg.barriers.w0, cfg.barriers.s_max);
    return pair;
}

BarrierBoundary make_barrier_boundary(const RunConfig& cfg, const BarrierPair& pair,
                                      BarrierBranch branch) {
    BarrierBoundary bb;
    bb.profile = branch == BarrierBranch::sub ? pair.sub : pair.super;
    EigenDecomposition eig = eigh(cfg.quadratic.a);
    bb.frame = eig.vectors;
    bb.b = cfg.quadratic.b;
    bb.c = cfg.quadratic.c;
    return bb;
}

SolverConfig make_solver_config(const RunConfig& cfg, const std::optional<BarrierPair>& pair) {
    SolverConfig scfg{cfg.grid, cfg.quadratic, cfg.boundary, GridField(cfg.grid),
                      cfg.cfl_safety, cfg.snapshot_times, std::nullopt};
    if (cfg.boundary != BoundaryRule::quadratic_exact || cfg.initial != InitialKind::quadratic) {
        if (!pair) throw std::invalid_argument("make_solver_config: barrier pair required");
    }
    if (cfg.boundary != BoundaryRule::quadratic_exact) {
        BarrierBranch branch = cfg.boundary == BoundaryRule::barrier_sub ? BarrierBranch::sub
                                                                        : BarrierBranch::super;
        scfg.barrier = make_barrier_boundary(cfg, *pair, branch);
    }
    if (cfg.initial == InitialKind::quadratic) {
        scfg.initial.add_level(cfg.grid.t_start,
                               sample_quadratic(cfg.grid, cfg.quadratic, cfg.grid.t_start));
    } else {
        BarrierBranch branch = cfg.initial == InitialKind::barrier_sub ? BarrierBranch::sub
                                                                      : BarrierBranch::super;
        BarrierBoundary bb = make_barrier_boundary(cfg, *pair, branch);
        std::vector<double> values(cfg.grid.node_count());
        std::array<double, 3> xbuf{};
        std::span<double> x(xbuf.data(), cfg.grid.n);
        for (std::int64_t node = 0; node < cfg.grid.node_count(); ++node) {
            cfg.grid.node_coords(node, x);
            values[node] = bb.eval_u(x, cfg.grid.t_start);
        }
        scfg.initial.add_level(cfg.grid.t_start, std::move(values));
    }
    return scfg;
}

nlohmann::json run_checks(const RunConfig& cfg, const GridField& u,
                          const std::optional<BarrierPair>& pair, bool& all_passed) {
    json checks;
    all_passed = true;
    auto finish = [&](const char* name, json detail, bool pass) {
        detail["enabled"] = true;
        detail["pass"] = pass;
        checks[name] = std::move(detail);
        if (!pass) all_passed = false;
    };
    auto disabled = [&](const char* name) { checks[name] = {{"enabled", false}}; };

    GridField err = error_field(u, cfg.quadratic);
    const ChecksConfig& cc = cfg.checks;

    if (cc.rigidity.enabled) {
        double worst = 0.0;
        int levels_used = 0;
        for (std::size_t lev = 0; lev < err.level_count(); ++lev) {
            if (err.times[lev] > cc.rigidity.t_cut + 1e-12) continue;
            ++levels_used;
            for (double v : err.levels[lev]) worst = std::max(worst, std::abs(v));
        }
        json detail{{"max_error", worst}, {"tol", cc.rigidity.tol},
                    {"levels_used", levels_used}};
        finish("rigidity", detail, levels_used > 0 && worst <= cc.rigidity.tol);
    } else {
        disabled("rigidity");
    }

    if (cc.exponential_rate.enabled) {
        json detail{{"kappa_rel_tol", cc.exponential_rate.kappa_rel_tol},
                    {"r2_min", cc.exponential_rate.r2_min}};
        try {
            RateFit fit = fit_exponential_rate(err, cc.exponential_rate.t_shift,
                                               cc.exponential_rate.r_in,
                                               cc.exponential_rate.r_out);
            SymMatrix target = kappa_target(cfg.quadratic.a);
            double rel = frobenius_gap(fit.fitted_kappa, target) / target.frobenius_norm();
            detail["fitted_kappa"] = matrix_to_json(fit.fitted_kappa);
            detail["kappa_rel_err"] = rel;
            detail["r2"] = fit.r2;
            detail["fitted_s"] = fit.fitted_s;
            detail["fitted_c"] = fit.fitted_c;
            detail["samples"] = fit.samples;
            finish("exponential_rate", detail,
                   rel <= cc.exponential_rate.kappa_rel_tol &&
                       fit.r2 >= cc.exponential_rate.r2_min);
        } catch (const std::exception& e) {
            detail["error"] = e.what();
            finish("exponential_rate", detail, false);
        }
    } else {
        disabled("exponential_rate");
    }

    if (cc.domination.enabled) {
        json detail{{"min_fraction", cc.domination.min_fraction}};
        try {
            SymMatrix target = kappa_target(cfg.quadratic.a);
            KappaForm kf;
            for (int i = 0; i < target.dim(); ++i) kf.kappa.push_back(target(i, i));
            double source_radius =
                cfg.forcing.compact() ? cfg.forcing.support_radius() : 0.0;
            DominationReport rep = bound_domination_check(
                err, kf, cc.exponential_rate.t_shift, source_radius,
                cc.exponential_rate.r_in, cc.exponential_rate.r_out);
            detail["holdout_fraction"] = rep.holdout_fraction;
            detail["holdout_samples"] = rep.holdout_samples;
            detail["c_fit"] = rep.bound.c_fit;
            detail["s_tilde"] = rep.bound.s_tilde;
            finish("domination", detail, rep.holdout_fraction >= cc.domination.min_fraction);
        } catch (const std::exception& e) {
            detail["error"] = e.what();
            finish("domination", detail, false);
        }
    } else {
        disabled("domination");
    }

    if (cc.polynomial_rate.enabled) {
        json detail{{"target_slope", cc.polynomial_rate.target_slope},
                    {"rel_tol", cc.polynomial_rate.rel_tol}};
        try {
            PolyRateFit fit =
                fit_polynomial_rate(err, cc.polynomial_rate.r_in, cc.polynomial_rate.r_out);
            detail["slope"] = fit.slope;
            detail["r2"] = fit.r2;
            detail["samples"] = fit.samples;
            double gap = std::abs(fit.slope - cc.polynomial_rate.target_slope);
            finish("polynomial_rate", detail,
                   gap <= cc.polynomial_rate.rel_tol *
                              std::abs(cc.polynomial_rate.target_slope));
        } catch (const std::exception& e) {
            detail["error"] = e.what();
            finish("polynomial_rate", detail, false);
        }
    } else {
        disabled("polynomial_rate");
    }

    if (cc.sandwich.enabled) {
        if (!pair) throw std::invalid_argument("run_checks: sandwich needs the barrier pair");
        SandwichReport rep = sandwich_check(u, pair->sub, pair->super, cfg.quadratic);
        double worst = std::max(rep.worst_low, rep.worst_high);
        json detail{{"worst_low", rep.worst_low},
                    {"worst_high", rep.worst_high},
                    {"checked", rep.checked},
                    {"tol", cc.sandwich.tol}};
        finish("sandwich", detail, worst <= cc.sandwich.tol);
    } else {
        disabled("sandwich");
    }

    if (cc.linearized.enabled) {
        SymMatrix limit = lag_operator_derivative(cfg.quadratic.a);
        const SpaceTimeGrid& g = err.grid;
        std::int64_t within = 0, total = 0;
        std::array<double, 3> xbuf{};
        std::span<double> x(xbuf.data(), g.n);
        for (std::size_t lev = 0; lev < err.level_count(); ++lev) {
            for (std::int64_t node = 0; node < g.node_count(); ++node) {
                auto idx = g.unpack(node);
                bool interior = true;
                for (int d = 0; d < g.n; ++d)
                    if (idx[d] == 0 || idx[d] == g.points_per_axis() - 1) interior = false;
                if (!interior) continue;
                g.node_coords(node, x);
                double r = 0.0;
                for (int d = 0; d < g.n; ++d) r += x[d] * x[d];
                r = std::sqrt(r);
                if (r < cc.linearized.r_in || r > cc.linearized.r_out) continue;
                std::span<const int> idx_span(idx.data(), g.n);
                SymMatrix coeff =
                    linearized_coefficients(err, cfg.quadratic.a, lev, idx_span);
                SymMatrix hess = hessian_at(err, lev, idx_span);
                ++total;
                if (frobenius_gap(coeff, limit) <=
                    cc.linearized.factor * hess.frobenius_norm())
                    ++within;
            }
        }
        json detail{{"fraction", total > 0 ? static_cast<double>(within) / total : 0.0},
                    {"nodes", total},
                    {"factor", cc.linearized.factor},
                    {"min_fraction", cc.linearized.min_fraction}};
        finish("linearized", detail,
               total > 0 &&
                   static_cast<double>(within) / total >= cc.linearized.min_fraction);
    } else {
        disabled("linearized");
    }

    return checks;
}

nlohmann::json barrier_summary(const BarrierPair& pair) {
    const ThetaParams& p = pair.params;
    return json{{"a", p.a},
                {"tau", p.tau},
                {"beta", p.beta},
                {"theta", p.theta},
                {"k_shift", p.k_shift},
                {"tau_tilde", p.tau_tilde},
                {"m_value", p.m_value},
                {"d", p.d},
                {"envelope_peak", pair.env.peak},
                {"envelope_s0", pair.env.s0},
                {"envelope_floor", pair.env.floor_eps},
                {"c_norm_sub", pair.sub.c_norm},
                {"c_norm_super", pair.super.c_norm},
                {"tail_slope_sub", pair.sub.tail_slope},
                {"tail_slope_super", pair.super.tail_slope},
                {"tail_coef_sub", pair.sub.tail_coef},
                {"tail_coef_super", pair.super.tail_coef}};
}

std::vector<KernelCase> default_kernel_cases() {
    std::mt19937 rng(20260823u);
    auto uniform = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    std::vector<KernelCase> cases;
    for (int i = 0; i < 20; ++i) {
        KernelCase c;
        c.n = (i % 2) + 1;
        double exp_hi = c.n / 2.0 + 0.25;
        c.alpha = uniform(-0.5, exp_hi);
        c.beta = uniform(-0.5, exp_hi);
        c.sigma = uniform(-2.0, 0.0);
        c.t = c.sigma + uniform(0.5, 3.0);
        double comp = 2.0 / std::sqrt(static_cast<double>(c.n));
        for (int d = 0; d < c.n; ++d) {
            c.kappa.push_back(uniform(0.5, 3.0));
            c.x.push_back(uniform(-comp, comp));
            c.y.push_back(uniform(-comp, comp));
        }
        cases.push_back(std::move(c));
    }
    return cases;
}

namespace {

json make_manifest(const RunConfig& cfg, const SolverConfig& scfg, const GridField& u,
                   double wall_time_s, double max_update) {
    int steps = scfg.grid.steps();
    json files{{"snapshots", "snapshots.csv"}, {"verdict", "verdict.json"}};
    json manifest{{"name", cfg.name},
                  {"config", json::parse(serialize_run_config(cfg))},
                  {"steps", steps},
                  {"dt_effective", (scfg.grid.t_end - scfg.grid.t_start) / steps},
                  {"snapshot_times", u.times},
                  {"max_update", max_update},
                  {"wall_time_s", wall_time_s},
                  {"files", files}};
    return manifest;
}

std::optional<BarrierPair> maybe_build_barriers(const RunConfig& cfg,
                                                const std::string& out_dir) {
    if (!cfg.needs_barriers()) return std::nullopt;
    BarrierPair pair = build_barrier_pair(cfg);
    namespace fs = std::filesystem;
    write_json_file((fs::path(out_dir) / "barrier_summary.json").string(),
                    barrier_summary(pair));
    write_barrier_table_csv((fs::path(out_dir) / "barrier_table.csv").string(), pair.sub,
                            pair.super);
    return pair;
}

GridField timed_solve(const SolverConfig& scfg, const Forcing& f, double& wall_time_s,
                      double& max_update) {
    auto start = std::chrono::steady_clock::now();
    GridField u = solve(scfg, f, &max_update);
    wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                      .count();
    return u;
}

}  // namespace

int run_pipeline(const RunConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::optional<BarrierPair> pair = maybe_build_barriers(cfg, out_dir);
    SolverConfig scfg = make_solver_config(cfg, pair);
    double wall_time_s = 0.0, max_update = 0.0;
    GridField u = timed_solve(scfg, cfg.forcing, wall_time_s, max_update);
    write_snapshots_csv((fs::path(out_dir) / "snapshots.csv").string(), u);
    bool all_passed = true;
    json checks = run_checks(cfg, u, pair, all_passed);
    write_json_file((fs::path(out_dir) / "verdict.json").string(),
                    json{{"checks", checks}, {"overall", all_passed}});
    write_json_file((fs::path(out_dir) / "manifest.json").string(),
                    make_manifest(cfg, scfg, u, wall_time_s, max_update));
    report_checks(checks);
    std::printf("overall: %s\n", all_passed ? "PASS" : "FAIL");
    return all_passed ? 0 : 1;
}

int solve_pipeline(const RunConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::optional<BarrierPair> pair = maybe_build_barriers(cfg, out_dir);
    SolverConfig scfg = make_solver_config(cfg, pair);
    double wall_time_s = 0.0, max_update = 0.0;
    GridField u = timed_solve(scfg, cfg.forcing, wall_time_s, max_update);
    write_snapshots_csv((fs::path(out_dir) / "snapshots.csv").string(), u);
    write_json_file((fs::path(out_dir) / "manifest.json").string(),
                    make_manifest(cfg, scfg, u, wall_time_s, max_update));
    std::printf("solved %d steps, %zu snapshots, max_update=%.3g\n", scfg.grid.steps(),
                u.level_count(), max_update);
    return 0;
}

int verify_pipeline(const RunConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    GridField u =
        read_snapshots_csv((fs::path(out_dir) / "snapshots.csv").string(), cfg.grid);
    std::optional<BarrierPair> pair;
    if (cfg.needs_barriers()) pair = build_barrier_pair(cfg);
    bool all_passed = true;
    json checks = run_checks(cfg, u, pair, all_passed);
    write_json_file((fs::path(out_dir) / "verdict.json").string(),
                    json{{"checks", checks}, {"overall", all_passed}});
    report_checks(checks);
    std::printf("overall: %s\n", all_passed ? "PASS" : "FAIL");
    return all_passed ? 0 : 1;
}

int barrier_pipeline(const RunConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    BarrierPair pair = build_barrier_pair(cfg);
    write_json_file((fs::path(out_dir) / "barrier_summary.json").string(),
                    barrier_summary(pair));
    write_barrier_table_csv((fs::path(out_dir) / "barrier_table.csv").string(), pair.sub,
                            pair.super);
    std::printf("theta=%.6g k_shift=%.6g m_value=%.6g tail_slopes=(%.4g, %.4g)\n",
                pair.params.theta, pair.params.k_shift, pair.params.m_value,
                pair.sub.tail_slope, pair.super.tail_slope);
    return 0;
}

int kernel_check_pipeline(const std::string& out_dir, double rel_tol) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<KernelCase> cases = default_kernel_cases();
    std::ostringstream csv;
    csv << "case,n,alpha,beta,sigma,t,kappa,x,y,quadrature,closed_form,rel_error\n";
    auto join = [](const std::vector<double>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ';';
            out += format_double(v[i]);
        }
        return out;
    };
    int failures = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const KernelCase& c = cases[i];
        KappaForm kf{c.kappa};
        ConvolutionCheck chk =
            convolution_identity_check(kf, c.alpha, c.beta, c.x, c.y, c.t, c.sigma);
        double rel = std::abs(chk.quadrature - chk.closed_form) / std::abs(chk.closed_form);
        worst = std::max(worst, rel);
        if (!(rel <= rel_tol)) ++failures;
        csv << i << ',' << c.n << ',' << format_double(c.alpha) << ','
            << format_double(c.beta) << ',' << format_double(c.sigma) << ','
            << format_double(c.t) << ',' << join(c.kappa) << ',' << join(c.x) << ','
            << join(c.y) << ',' << format_double(chk.quadrature) << ','
            << format_double(chk.closed_form) << ',' << format_double(rel) << '\n';
    }
    write_text_file((fs::path(out_dir) / "kernel_check.csv").string(), csv.str());
    std::printf("%zu identity cases, worst rel_error=%.3g, tol=%.3g: %s\n", cases.size(),
                worst, rel_tol, failures == 0 ? "PASS" : "FAIL");
    return failures == 0 ? 0 : 1;
}

int chi_search_pipeline(std::span<const double> r_values, const std::string& out_dir,
                        double min_value) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    ChiSearchResult result = chi_search(r_values, 2, 1.0, 0.5);
    bool pass = result.all_positive;
    for (double v : result.min_values)
        if (!(v > min_value)) pass = false;
    json doc{{"best",
              {{"c", result.best.c},
               {"k", result.best.k},
               {"beta_chi", result.best.beta_chi},
               {"k_deg", result.best.k_deg},
               {"alpha_deg", result.best.alpha_deg}}},
             {"r_values", result.r_values},
             {"min_values", result.min_values},
             {"all_positive", result.all_positive}};
    write_json_file((fs::path(out_dir) / "chi_search.json").string(), doc);
    std::printf("witness c=%.4g k=%.4g beta_chi=%.4g: %s\n", result.best.c, result.best.k,
                result.best.beta_chi, pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

}  // namespace lmcf
