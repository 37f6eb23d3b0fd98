#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmcf/config.hpp"
#include "lmcf/verify.hpp"

namespace lmcf {

/// Both barrier branches built for one experiment, sharing the shift
/// parameters and the forcing envelopes.
struct BarrierPair {
    ThetaParams params;
    ForcingEnvelopes env;
    BarrierProfile sub;
    BarrierProfile super;
};

/// Builds the pair from the curvature eigenvalues and the configured decay
/// exponent; throws on invariant violations.
BarrierPair build_barrier_pair(const RunConfig& cfg);

/// Wraps one branch as boundary/initial data in solution coordinates.
BarrierBoundary make_barrier_boundary(const RunConfig& cfg, const BarrierPair& pair,
                                      BarrierBranch branch);

/// Assembles the marching configuration, sampling the configured initial
/// data. `pair` must be present when a barrier rule is referenced.
SolverConfig make_solver_config(const RunConfig& cfg, const std::optional<BarrierPair>& pair);

/// Runs every enabled check against the marched field. Returns the verdict
/// subtree (one entry per check) and sets `all_passed`. Deterministic: no
/// timing or environment data.
nlohmann::json run_checks(const RunConfig& cfg, const GridField& u,
                          const std::optional<BarrierPair>& pair, bool& all_passed);

/// Summary document for a built pair: shifts, decay rate, normalization
/// constants, fitted tail slopes.
nlohmann::json barrier_summary(const BarrierPair& pair);

/// One randomized convolution-identity case; the default table is seeded and
/// shared between the CLI and the acceptance suite.
struct KernelCase {
    int n = 1;
    double alpha = 0.0;
    double beta = 0.0;
    double sigma = 0.0;
    double t = 1.0;
    std::vector<double> kappa;
    std::vector<double> x;
    std::vector<double> y;
};
std::vector<KernelCase> default_kernel_cases();

/// Full pipeline: barriers as needed, solve, snapshots, checks, verdict,
/// manifest. Returns 0 when all enabled checks pass, 1 otherwise.
int run_pipeline(const RunConfig& cfg, const std::string& out_dir);

/// Solve and write snapshots/manifest without judging checks.
int solve_pipeline(const RunConfig& cfg, const std::string& out_dir);

/// Re-judges checks against previously written snapshots in `out_dir`.
int verify_pipeline(const RunConfig& cfg, const std::string& out_dir);

/// Builds and tabulates the barrier pair only.
int barrier_pipeline(const RunConfig& cfg, const std::string& out_dir);

/// Evaluates the default identity cases, writes the CSV, returns 1 if any
/// relative error exceeds rel_tol.
int kernel_check_pipeline(const std::string& out_dir, double rel_tol);

/// Searches for a positive comparison-profile witness over the given radii
/// and writes the result; returns 0 iff every minimum clears min_value.
int chi_search_pipeline(std::span<const double> r_values, const std::string& out_dir,
                        double min_value);

}  // namespace lmcf
