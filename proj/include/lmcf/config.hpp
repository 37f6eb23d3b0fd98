#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmcf/problem.hpp"
#include "lmcf/solver.hpp"

namespace lmcf {

/// Anything wrong with a config file or a tolerance override: syntax errors
/// (reported with line and column), unknown keys, missing keys, or values
/// that violate a module invariant. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class InitialKind { quadratic, barrier_sub, barrier_super };

/// Barrier construction knobs: the decay exponent of the forcing envelope,
/// the positive floor that keeps the envelope away from zero, the starting
/// value of the profile ODE (NaN selects the admissible-interval midpoint),
/// and the mesh extent.
struct BarrierConfig {
    double beta = 3.0;
    double envelope_floor = 1e-3;
    double w0 = std::numeric_limits<double>::quiet_NaN();
    double s_max = 1e4;
};

/// Per-check switches and tolerances. Defaults match the documented
/// acceptance thresholds; every number can be adjusted from the config file
/// or with --tol-override.
struct RigidityCheckConfig {
    bool enabled = false;
    double tol = 1e-9;
    double t_cut = 0.0;  // levels with t <= t_cut are checked
};

struct ExponentialRateCheckConfig {
    bool enabled = false;
    double t_shift = 1.0;  // the T of the (t+T) envelope
    double r_in = 4.0;
    double r_out = 6.0;
    double kappa_rel_tol = 0.25;
    double r2_min = 0.95;
};

struct DominationCheckConfig {
    bool enabled = false;  // requires a diagonal curvature matrix
    double min_fraction = 0.99;
};

struct PolynomialRateCheckConfig {
    bool enabled = false;
    double r_in = 3.5;
    double r_out = 5.5;
    double target_slope = -1.0;
    double rel_tol = 0.2;
};

struct SandwichCheckConfig {
    bool enabled = false;
    double tol = 1e-8;
};

struct LinearizedCheckConfig {
    bool enabled = false;
    double factor = 10.0;
    double min_fraction = 0.99;
    double r_in = 4.0;
    double r_out = 6.0;
};

struct ChecksConfig {
    RigidityCheckConfig rigidity;
    ExponentialRateCheckConfig exponential_rate;
    DominationCheckConfig domination;
    PolynomialRateCheckConfig polynomial_rate;
    SandwichCheckConfig sandwich;
    LinearizedCheckConfig linearized;
};

/// One experiment: problem data, grid, marching choices, barrier knobs,
/// enabled checks, and the output directory. Parsed from strict JSON
/// (unknown keys are rejected) and serialized canonically, so
/// parse(serialize(parse(text))) == parse(text).
struct RunConfig {
    std::string name;
    QuadraticProfile quadratic{SymMatrix(1), std::vector<double>{0.0}, 0.0};
    Forcing forcing = Forcing::zero(1);
    SpaceTimeGrid grid;
    InitialKind initial = InitialKind::quadratic;
    BoundaryRule boundary = BoundaryRule::quadratic_exact;
    double cfl_safety = 0.9;
    std::vector<double> snapshot_times;
    BarrierConfig barriers;
    ChecksConfig checks;
    std::string output_dir = "out";

    /// True when any configured piece needs the barrier pair built.
    bool needs_barriers() const;
};

/// Parses a config document. `overrides` are `dotted.path=value` entries
/// applied to the `checks` subtree before interpretation; the path must name
/// an existing numeric field.
RunConfig parse_run_config(const std::string& text,
                           std::span<const std::string> overrides = {});

/// Reads and parses the file at `path`; errors mention the file name.
RunConfig load_run_config(const std::string& path,
                          std::span<const std::string> overrides = {});

/// Canonical JSON form (keys sorted, all fields present, trailing newline).
std::string serialize_run_config(const RunConfig& cfg);

/// Applies `dotted.path=value` overrides to a JSON object in place. Each
/// path must resolve to an existing numeric field; anything else throws
/// ConfigError. Subcommands without a config file use this on their own
/// built-in tolerance tables.
void apply_tol_overrides(nlohmann::json& doc, std::span<const std::string> overrides);

const char* initial_kind_name(InitialKind k);
const char* boundary_rule_name(BoundaryRule r);

}  // namespace lmcf
