#include "lmcf/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lmcf {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

/// Translates a byte offset from the JSON parser into line:column.
std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

void require_keys(const json& obj, const char* where,
                  std::initializer_list<const char*> allowed,
                  std::initializer_list<const char*> required) {
    if (!obj.is_object()) fail(std::string(where) + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items())
        if (!ok.count(item.key()))
            fail(std::string(where) + ": unknown key '" + item.key() + "'");
    for (const char* key : required)
        if (!obj.contains(key))
            fail(std::string(where) + ": missing required key '" + key + "'");
}

double get_number(const json& obj, const char* where, const char* key) {
    const json& v = obj.at(key);
    if (!v.is_number()) fail(std::string(where) + "." + key + ": expected a number");
    return v.get<double>();
}

double get_number_or(const json& obj, const char* where, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    return get_number(obj, where, key);
}

bool get_bool_or(const json& obj, const char* where, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(std::string(where) + "." + key + ": expected a boolean");
    return v.get<bool>();
}

std::string get_string(const json& obj, const char* where, const char* key) {
    const json& v = obj.at(key);
    if (!v.is_string()) fail(std::string(where) + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::vector<double> get_vector(const json& v, const char* where) {
    if (!v.is_array()) fail(std::string(where) + ": expected an array of numbers");
    std::vector<double> out;
    for (const json& e : v) {
        if (!e.is_number()) fail(std::string(where) + ": expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

SymMatrix parse_matrix(const json& v, const char* where) {
    if (!v.is_array() || v.empty()) fail(std::string(where) + ": expected a nested array");
    int n = static_cast<int>(v.size());
    if (n > SymMatrix::kMaxDim) fail(std::string(where) + ": dimension too large");
    std::vector<double> dense;
    for (const json& row : v) {
        std::vector<double> r = get_vector(row, where);
        if (static_cast<int>(r.size()) != n)
            fail(std::string(where) + ": rows must all have length " + std::to_string(n));
        dense.insert(dense.end(), r.begin(), r.end());
    }
    try {
        return SymMatrix::from_dense(dense, n);
    } catch (const std::exception& e) {
        fail(std::string(where) + ": " + e.what());
    }
}

Forcing parse_forcing(const json& v, int n) {
    std::string kind = get_string(v, "problem.forcing", "kind");
    try {
        if (kind == "zero") {
            require_keys(v, "problem.forcing", {"kind"}, {"kind"});
            return Forcing::zero(n);
        }
        if (kind == "compact_bump") {
            require_keys(v, "problem.forcing",
                         {"kind", "center", "radius", "amplitude", "t_width"},
                         {"kind", "radius", "amplitude", "t_width"});
            std::vector<double> center(n, 0.0);
            if (v.contains("center")) center = get_vector(v.at("center"), "problem.forcing.center");
            if (static_cast<int>(center.size()) != n)
                fail("problem.forcing.center: expected " + std::to_string(n) + " entries");
            return Forcing::compact_bump(center, get_number(v, "problem.forcing", "radius"),
                                         get_number(v, "problem.forcing", "amplitude"),
                                         get_number(v, "problem.forcing", "t_width"));
        }
        if (kind == "algebraic_decay") {
            require_keys(v, "problem.forcing", {"kind", "beta", "amplitude"},
                         {"kind", "beta", "amplitude"});
            return Forcing::algebraic_decay(n, get_number(v, "problem.forcing", "beta"),
                                            get_number(v, "problem.forcing", "amplitude"));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(std::string("problem.forcing: ") + e.what());
    }
    fail("problem.forcing.kind: expected 'zero', 'compact_bump', or 'algebraic_decay'");
}

InitialKind parse_initial(const std::string& s) {
    if (s == "quadratic") return InitialKind::quadratic;
    if (s == "barrier_sub") return InitialKind::barrier_sub;
    if (s == "barrier_super") return InitialKind::barrier_super;
    fail("solver.initial: expected 'quadratic', 'barrier_sub', or 'barrier_super'");
}

BoundaryRule parse_boundary(const std::string& s) {
    if (s == "quadratic_exact") return BoundaryRule::quadratic_exact;
    if (s == "barrier_sub") return BoundaryRule::barrier_sub;
    if (s == "barrier_super") return BoundaryRule::barrier_super;
    fail("solver.boundary: expected 'quadratic_exact', 'barrier_sub', or 'barrier_super'");
}

void apply_override(json& checks, const std::string& request) {
    std::size_t eq = request.find('=');
    if (eq == std::string::npos || eq == 0)
        fail("tol-override '" + request + "': expected dotted.path=value");
    std::string path = request.substr(0, eq);
    std::string value_text = request.substr(eq + 1);
    double value = 0.0;
    try {
        std::size_t used = 0;
        value = std::stod(value_text, &used);
        if (used != value_text.size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
        fail("tol-override '" + request + "': value is not a number");
    }
    json* node = &checks;
    std::size_t start = 0;
    std::vector<std::string> segments;
    while (true) {
        std::size_t dot = path.find('.', start);
        segments.push_back(path.substr(start, dot == std::string::npos ? dot : dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
        if (!node->is_object() || !node->contains(segments[i]))
            fail("tol-override '" + request + "': no such check field");
        node = &(*node)[segments[i]];
    }
    const std::string& leaf = segments.back();
    if (!node->is_object() || !node->contains(leaf) || !(*node)[leaf].is_number())
        fail("tol-override '" + request + "': no such numeric field");
    (*node)[leaf] = value;
}

void parse_checks(const json& v, ChecksConfig& out) {
    require_keys(v, "checks",
                 {"rigidity", "exponential_rate", "domination", "polynomial_rate",
                  "sandwich", "linearized"},
                 {});
    if (v.contains("rigidity")) {
        const json& c = v.at("rigidity");
        require_keys(c, "checks.rigidity", {"enabled", "tol", "t_cut"}, {});
        out.rigidity.enabled = get_bool_or(c, "checks.rigidity", "enabled", false);
        out.rigidity.tol = get_number_or(c, "checks.rigidity", "tol", out.rigidity.tol);
        out.rigidity.t_cut = get_number_or(c, "checks.rigidity", "t_cut", out.rigidity.t_cut);
    }
    if (v.contains("exponential_rate")) {
        const json& c = v.at("exponential_rate");
        require_keys(c, "checks.exponential_rate",
                     {"enabled", "t_shift", "r_in", "r_out", "kappa_rel_tol", "r2_min"}, {});
        auto& e = out.exponential_rate;
        e.enabled = get_bool_or(c, "checks.exponential_rate", "enabled", false);
        e.t_shift = get_number_or(c, "checks.exponential_rate", "t_shift", e.t_shift);
        e.r_in = get_number_or(c, "checks.exponential_rate", "r_in", e.r_in);
        e.r_out = get_number_or(c, "checks.exponential_rate", "r_out", e.r_out);
        e.kappa_rel_tol =
            get_number_or(c, "checks.exponential_rate", "kappa_rel_tol", e.kappa_rel_tol);
        e.r2_min = get_number_or(c, "checks.exponential_rate", "r2_min", e.r2_min);
    }
    if (v.contains("domination")) {
        const json& c = v.at("domination");
        require_keys(c, "checks.domination", {"enabled", "min_fraction"}, {});
        out.domination.enabled = get_bool_or(c, "checks.domination", "enabled", false);
        out.domination.min_fraction =
            get_number_or(c, "checks.domination", "min_fraction", out.domination.min_fraction);
    }
    if (v.contains("polynomial_rate")) {
        const json& c = v.at("polynomial_rate");
        require_keys(c, "checks.polynomial_rate",
                     {"enabled", "r_in", "r_out", "target_slope", "rel_tol"}, {});
        auto& p = out.polynomial_rate;
        p.enabled = get_bool_or(c, "checks.polynomial_rate", "enabled", false);
        p.r_in = get_number_or(c, "checks.polynomial_rate", "r_in", p.r_in);
        p.r_out = get_number_or(c, "checks.polynomial_rate", "r_out", p.r_out);
        p.target_slope =
            get_number_or(c, "checks.polynomial_rate", "target_slope", p.target_slope);
        p.rel_tol = get_number_or(c, "checks.polynomial_rate", "rel_tol", p.rel_tol);
    }
    if (v.contains("sandwich")) {
        const json& c = v.at("sandwich");
        require_keys(c, "checks.sandwich", {"enabled", "tol"}, {});
        out.sandwich.enabled = get_bool_or(c, "checks.sandwich", "enabled", false);
        out.sandwich.tol = get_number_or(c, "checks.sandwich", "tol", out.sandwich.tol);
    }
    if (v.contains("linearized")) {
        const json& c = v.at("linearized");
        require_keys(c, "checks.linearized",
                     {"enabled", "factor", "min_fraction", "r_in", "r_out"}, {});
        auto& l = out.linearized;
        l.enabled = get_bool_or(c, "checks.linearized", "enabled", false);
        l.factor = get_number_or(c, "checks.linearized", "factor", l.factor);
        l.min_fraction = get_number_or(c, "checks.linearized", "min_fraction", l.min_fraction);
        l.r_in = get_number_or(c, "checks.linearized", "r_in", l.r_in);
        l.r_out = get_number_or(c, "checks.linearized", "r_out", l.r_out);
    }
}

json checks_to_json(const ChecksConfig& c) {
    json v;
    v["rigidity"] = {{"enabled", c.rigidity.enabled},
                     {"tol", c.rigidity.tol},
                     {"t_cut", c.rigidity.t_cut}};
    v["exponential_rate"] = {{"enabled", c.exponential_rate.enabled},
                             {"t_shift", c.exponential_rate.t_shift},
                             {"r_in", c.exponential_rate.r_in},
                             {"r_out", c.exponential_rate.r_out},
                             {"kappa_rel_tol", c.exponential_rate.kappa_rel_tol},
                             {"r2_min", c.exponential_rate.r2_min}};
    v["domination"] = {{"enabled", c.domination.enabled},
                       {"min_fraction", c.domination.min_fraction}};
    v["polynomial_rate"] = {{"enabled", c.polynomial_rate.enabled},
                            {"r_in", c.polynomial_rate.r_in},
                            {"r_out", c.polynomial_rate.r_out},
                            {"target_slope", c.polynomial_rate.target_slope},
                            {"rel_tol", c.polynomial_rate.rel_tol}};
    v["sandwich"] = {{"enabled", c.sandwich.enabled}, {"tol", c.sandwich.tol}};
    v["linearized"] = {{"enabled", c.linearized.enabled},
                       {"factor", c.linearized.factor},
                       {"min_fraction", c.linearized.min_fraction},
                       {"r_in", c.linearized.r_in},
                       {"r_out", c.linearized.r_out}};
    return v;
}

RunConfig interpret(const json& root, std::span<const std::string> overrides) {
    require_keys(root, "config",
                 {"name", "problem", "grid", "solver", "barriers", "checks", "output_dir"},
                 {"name", "problem", "grid", "output_dir"});
    RunConfig cfg;
    cfg.name = get_string(root, "config", "name");
    cfg.output_dir = get_string(root, "config", "output_dir");

    const json& grid = root.at("grid");
    require_keys(grid, "grid", {"n", "radius", "h", "t_start", "t_end", "dt"},
                 {"n", "radius", "h", "t_start", "t_end", "dt"});
    cfg.grid.n = static_cast<int>(get_number(grid, "grid", "n"));
    cfg.grid.radius = get_number(grid, "grid", "radius");
    cfg.grid.h = get_number(grid, "grid", "h");
    cfg.grid.t_start = get_number(grid, "grid", "t_start");
    cfg.grid.t_end = get_number(grid, "grid", "t_end");
    cfg.grid.dt = get_number(grid, "grid", "dt");
    try {
        cfg.grid.validate();
    } catch (const std::exception& e) {
        fail(std::string("grid: ") + e.what());
    }

    const json& prob = root.at("problem");
    require_keys(prob, "problem", {"a", "b", "c", "forcing"}, {"a", "forcing"});
    SymMatrix a = parse_matrix(prob.at("a"), "problem.a");
    if (a.dim() != cfg.grid.n)
        fail("problem.a: dimension " + std::to_string(a.dim()) + " does not match grid.n");
    std::vector<double> b(cfg.grid.n, 0.0);
    if (prob.contains("b")) {
        b = get_vector(prob.at("b"), "problem.b");
        if (static_cast<int>(b.size()) != cfg.grid.n)
            fail("problem.b: expected " + std::to_string(cfg.grid.n) + " entries");
    }
    double c = get_number_or(prob, "problem", "c", 0.0);
    try {
        cfg.quadratic = QuadraticProfile(a, b, c);
    } catch (const std::exception& e) {
        fail(std::string("problem: ") + e.what());
    }
    cfg.forcing = parse_forcing(prob.at("forcing"), cfg.grid.n);

    if (root.contains("solver")) {
        const json& sol = root.at("solver");
        require_keys(sol, "solver", {"initial", "boundary", "cfl_safety", "snapshot_times"},
                     {});
        if (sol.contains("initial"))
            cfg.initial = parse_initial(get_string(sol, "solver", "initial"));
        if (sol.contains("boundary"))
            cfg.boundary = parse_boundary(get_string(sol, "solver", "boundary"));
        cfg.cfl_safety = get_number_or(sol, "solver", "cfl_safety", cfg.cfl_safety);
        if (sol.contains("snapshot_times"))
            cfg.snapshot_times =
                get_vector(sol.at("snapshot_times"), "solver.snapshot_times");
    }
    if (!(cfg.cfl_safety > 0.0) || cfg.cfl_safety > 1.0)
        fail("solver.cfl_safety: expected a value in (0, 1]");
    if (cfg.grid.dt > cfg.cfl_safety * cfg.grid.cfl_bound() * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "grid.dt " << cfg.grid.dt << " exceeds the stability bound "
            << cfg.cfl_safety * cfg.grid.cfl_bound() << " (cfl_safety * h^2/(2n))";
        fail(msg.str());
    }

    if (root.contains("barriers")) {
        const json& bar = root.at("barriers");
        require_keys(bar, "barriers", {"beta", "envelope_floor", "w0", "s_max"}, {});
        cfg.barriers.beta = get_number_or(bar, "barriers", "beta", cfg.barriers.beta);
        cfg.barriers.envelope_floor =
            get_number_or(bar, "barriers", "envelope_floor", cfg.barriers.envelope_floor);
        if (bar.contains("w0")) {
            const json& w0 = bar.at("w0");
            if (w0.is_string()) {
                if (w0.get<std::string>() != "midpoint")
                    fail("barriers.w0: expected a number or 'midpoint'");
            } else if (w0.is_number()) {
                cfg.barriers.w0 = w0.get<double>();
            } else {
                fail("barriers.w0: expected a number or 'midpoint'");
            }
        }
        cfg.barriers.s_max = get_number_or(bar, "barriers", "s_max", cfg.barriers.s_max);
        if (!(cfg.barriers.beta > 2.0)) fail("barriers.beta: expected a value > 2");
        if (!(cfg.barriers.envelope_floor > 0.0))
            fail("barriers.envelope_floor: expected a positive value");
        if (!(cfg.barriers.s_max > 1.0)) fail("barriers.s_max: expected a value > 1");
    }

    if (root.contains("checks")) {
        json checks = root.at("checks");
        apply_tol_overrides(checks, overrides);
        parse_checks(checks, cfg.checks);
    } else if (!overrides.empty()) {
        fail("tol-override given but the config has no checks section");
    }

    if (cfg.checks.domination.enabled) {
        const SymMatrix& am = cfg.quadratic.a;
        for (int i = 0; i < am.dim(); ++i)
            for (int j = 0; j < i; ++j)
                if (am(i, j) != 0.0)
                    fail("checks.domination: requires a diagonal curvature matrix");
    }
    for (double t : cfg.snapshot_times)
        if (t < cfg.grid.t_start - 1e-12 || t > cfg.grid.t_end + 1e-12)
            fail("solver.snapshot_times: time outside the marching window");
    try {
        cfg.forcing.validate();
    } catch (const std::exception& e) {
        fail(std::string("problem.forcing: ") + e.what());
    }
    return cfg;
}

}  // namespace

bool RunConfig::needs_barriers() const {
    return initial != InitialKind::quadratic || boundary != BoundaryRule::quadratic_exact ||
           checks.sandwich.enabled;
}

void apply_tol_overrides(nlohmann::json& doc, std::span<const std::string> overrides) {
    for (const std::string& o : overrides) apply_override(doc, o);
}

RunConfig parse_run_config(const std::string& text, std::span<const std::string> overrides) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        fail("config parse error at line " + std::to_string(line) + ", column " +
             std::to_string(col) + ": " + e.what());
    }
    return interpret(root, overrides);
}

RunConfig load_run_config(const std::string& path, std::span<const std::string> overrides) {
    std::ifstream in(path);
    if (!in) fail("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_run_config(buf.str(), overrides);
    } catch (const ConfigError& e) {
        fail(path + ": " + e.what());
    }
}

std::string serialize_run_config(const RunConfig& cfg) {
    json root;
    root["name"] = cfg.name;
    root["output_dir"] = cfg.output_dir;
    json a = json::array();
    for (int i = 0; i < cfg.quadratic.a.dim(); ++i) {
        json row = json::array();
        for (int j = 0; j < cfg.quadratic.a.dim(); ++j) row.push_back(cfg.quadratic.a(i, j));
        a.push_back(row);
    }
    json forcing;
    switch (cfg.forcing.kind) {
        case ForcingKind::zero:
            forcing["kind"] = "zero";
            break;
        case ForcingKind::compact_bump:
            forcing["kind"] = "compact_bump";
            forcing["center"] = cfg.forcing.center;
            forcing["radius"] = cfg.forcing.radius;
            forcing["amplitude"] = cfg.forcing.amplitude;
            forcing["t_width"] = cfg.forcing.t_width;
            break;
        case ForcingKind::algebraic_decay:
            forcing["kind"] = "algebraic_decay";
            forcing["beta"] = cfg.forcing.beta;
            forcing["amplitude"] = cfg.forcing.amplitude;
            break;
        case ForcingKind::tabulated:
            throw ConfigError("tabulated forcing has no config form");
    }
    root["problem"] = {{"a", a}, {"b", cfg.quadratic.b}, {"c", cfg.quadratic.c},
                       {"forcing", forcing}};
    root["grid"] = {{"n", cfg.grid.n},       {"radius", cfg.grid.radius},
                    {"h", cfg.grid.h},       {"t_start", cfg.grid.t_start},
                    {"t_end", cfg.grid.t_end}, {"dt", cfg.grid.dt}};
    json w0;
    if (std::isnan(cfg.barriers.w0))
        w0 = "midpoint";
    else
        w0 = cfg.barriers.w0;
    root["barriers"] = {{"beta", cfg.barriers.beta},
                        {"envelope_floor", cfg.barriers.envelope_floor},
                        {"w0", w0},
                        {"s_max", cfg.barriers.s_max}};
    root["solver"] = {{"initial", initial_kind_name(cfg.initial)},
                      {"boundary", boundary_rule_name(cfg.boundary)},
                      {"cfl_safety", cfg.cfl_safety},
                      {"snapshot_times", cfg.snapshot_times}};
    root["checks"] = checks_to_json(cfg.checks);
    return root.dump(2) + "\n";
}

const char* initial_kind_name(InitialKind k) {
    switch (k) {
        case InitialKind::quadratic: return "quadratic";
        case InitialKind::barrier_sub: return "barrier_sub";
        case InitialKind::barrier_super: return "barrier_super";
    }
    return "quadratic";
}

const char* boundary_rule_name(BoundaryRule r) {
    switch (r) {
        case BoundaryRule::quadratic_exact: return "quadratic_exact";
        case BoundaryRule::barrier_sub: return "barrier_sub";
        case BoundaryRule::barrier_super: return "barrier_super";
    }
    return "quadratic_exact";
}

}  // namespace lmcf
