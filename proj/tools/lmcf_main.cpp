#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lmcf/config.hpp"
#include "lmcf/pipeline.hpp"

namespace {

std::string pick_out_dir(const std::string& flag_value, const std::string& config_value) {
    return flag_value.empty() ? config_value : flag_value;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lmcf: finite-difference laboratory for u_t = sum_i arctan(lambda_i(D^2 u)) + f"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::vector<double> r_values;
    std::string cases = "default";

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", config_path, "experiment config (JSON)");
        if (config_required) c->required();
        sub->add_option("--out", out_dir,
                        "output directory (default: the config's output_dir)");
        sub->add_option("--tol-override", overrides,
                        "dotted.path=value tolerance override, repeatable");
    };

    CLI::App* run = app.add_subcommand("run", "solve, then judge every enabled check");
    add_common(run, true);
    CLI::App* solve = app.add_subcommand("solve", "march the configured problem and write snapshots");
    add_common(solve, true);
    CLI::App* verify = app.add_subcommand("verify", "re-judge checks against stored snapshots");
    add_common(verify, true);
    CLI::App* barrier = app.add_subcommand("barrier", "build and tabulate the barrier pair");
    add_common(barrier, true);
    CLI::App* kernel = app.add_subcommand("kernel-check", "evaluate the convolution identity cases");
    add_common(kernel, false);
    kernel->add_option("--cases", cases, "case table name (only 'default')");
    CLI::App* chi = app.add_subcommand("chi-search", "search for a positive comparison-profile witness");
    add_common(chi, false);
    chi->add_option("--R", r_values, "profile radius, repeatable (default 10 and 100)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run || *solve || *verify || *barrier) {
            lmcf::RunConfig cfg = lmcf::load_run_config(config_path, overrides);
            std::string out = pick_out_dir(out_dir, cfg.output_dir);
            if (*run) return lmcf::run_pipeline(cfg, out);
            if (*solve) return lmcf::solve_pipeline(cfg, out);
            if (*verify) return lmcf::verify_pipeline(cfg, out);
            return lmcf::barrier_pipeline(cfg, out);
        }
        if (*kernel) {
            if (cases != "default")
                throw lmcf::ConfigError("kernel-check: unknown case table '" + cases + "'");
            nlohmann::json tols{{"identity", {{"rel_tol", 1e-6}}}};
            lmcf::apply_tol_overrides(tols, overrides);
            std::string out = pick_out_dir(out_dir, "out");
            return lmcf::kernel_check_pipeline(out, tols["identity"]["rel_tol"].get<double>());
        }
        if (*chi) {
            nlohmann::json tols{{"witness", {{"min_value", 0.0}}}};
            lmcf::apply_tol_overrides(tols, overrides);
            if (r_values.empty()) r_values = {10.0, 100.0};
            std::string out = pick_out_dir(out_dir, "out");
            return lmcf::chi_search_pipeline(r_values, out,
                                             tols["witness"]["min_value"].get<double>());
        }
    } catch (const lmcf::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
