// Command-line driver: convergence studies, stability probes and single
// runs of the fractional convection-diffusion solver. See README.md for
// the config keys and output formats.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "frachdg/frachdg.hpp"

namespace {

using namespace frachdg;

struct CliOptions {
    std::string config;
    std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* cmd, CliOptions& opts) {
    cmd->add_option("--config", opts.config, "line-based `key = value` config file");
    // every config key is also a flag; flags override file values
    static const char* keys[] = {"example",     "alpha",   "beta",          "eps1",
                                 "eps2",        "degree",  "meshes",        "t_final",
                                 "dt_const",    "quad_smooth", "quad_singular", "out",
                                 "nx",          "steps",   "forcing",       "initial",
                                 "cache_dir"};
    for (const char* key : keys)
        cmd->add_option_function<std::string>(
            std::string("--") + key,
            [&opts, key](const std::string& v) { opts.overrides[key] = v; });
}

StudyConfig resolve_config(const CliOptions& opts) {
    StudyConfig cfg;
    if (!opts.config.empty())
        load_config_into(cfg, opts.config);
    for (const auto& [k, v] : opts.overrides)
        apply_config_entry(cfg, k, v);
    cfg.validate();
    return cfg;
}

int run_convergence(const CliOptions& opts) {
    const StudyConfig cfg = resolve_config(opts);
    const StudyReport rep = run_convergence_study(cfg, &std::cerr);
    if (cfg.out.empty())
        write_report_csv(rep, std::cout);
    else
        std::cerr << "report written to " << cfg.out << "\n";
    return 0;
}

int run_stability(const CliOptions& opts) {
    const StudyConfig cfg = resolve_config(opts);
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!cfg.out.empty()) {
        file.open(cfg.out);
        if (!file)
            throw std::invalid_argument("cannot open output file " + cfg.out);
        os = &file;
    }
    *os << "n,t,norm_u_sq,seminorm_cum,bound_ratio\n";
    run_stability_probe(cfg, os);
    return 0;
}

int run_single(const CliOptions& opts, const std::string& dump_state,
               const std::string& dump_mesh, const std::string& step_log) {
    const StudyConfig cfg = resolve_config(opts);
    RunContext ctx = build_run_context(cfg, cfg.nx);

    std::ofstream steps;
    if (!step_log.empty()) {
        steps.open(step_log);
        if (!steps)
            throw std::invalid_argument("cannot open step log " + step_log);
        steps << "# n t norm_u seminorm_increment\n";
    }
    march_to(ctx, cfg.t_final, [&](const SolutionState& s, double sem) {
        if (steps) {
            const double norm_u = std::sqrt(s.u.dot(ctx.stepper->system().M * s.u));
            steps << s.n << ' ' << fmt_sci(s.t) << ' ' << fmt_sci(norm_u) << ' '
                  << fmt_sci(sem) << '\n';
        }
    });

    const ErrorRow row = error_norms(*ctx.mesh, *ctx.basis, ctx.err_rule,
                                     ctx.stepper->state().u, ctx.problem, cfg.t_final);
    std::cout << "h,L2_u,L1_u,L2_dxu,L2_dyu\n"
              << fmt_sci(row.h) << ',' << fmt_sci(row.l2_u) << ',' << fmt_sci(row.l1_u) << ','
              << fmt_sci(row.l2_dxu) << ',' << fmt_sci(row.l2_dyu) << "\n";

    if (!dump_mesh.empty()) {
        std::ofstream os(dump_mesh);
        if (!os)
            throw std::invalid_argument("cannot open mesh dump " + dump_mesh);
        ctx.mesh->dump(os);
    }
    if (!dump_state.empty()) {
        std::ofstream os(dump_state);
        if (!os)
            throw std::invalid_argument("cannot open state dump " + dump_state);
        const int n = ctx.basis->size();
        const Eigen::VectorXd& u = ctx.stepper->state().u;
        os << "# elem node x y u\n";
        for (int e = 0; e < ctx.mesh->n_triangles(); ++e)
            for (int i = 0; i < n; ++i) {
                const Vec2 p = ctx.mesh->from_reference(e, ctx.basis->nodes()[i]);
                os << e << ' ' << i << ' ' << p.x << ' ' << p.y << ' ' << u(e * n + i)
                   << '\n';
            }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"HDG solver for 2D space-fractional convection-diffusion equations"};
    app.require_subcommand(1);

    CliOptions conv_opts, stab_opts, single_opts;
    std::string dump_state, dump_mesh, step_log;

    CLI::App* conv = app.add_subcommand("convergence", "run a mesh-sequence study");
    add_common(conv, conv_opts);
    CLI::App* stab = app.add_subcommand("stability", "per-step stability probe");
    add_common(stab, stab_opts);
    CLI::App* single = app.add_subcommand("single", "one mesh, norms and dumps");
    add_common(single, single_opts);
    single->add_option("--dump-state", dump_state, "write nodal values of u_h");
    single->add_option("--dump-mesh", dump_mesh, "write the mesh as v/t/e records");
    single->add_option("--step-log", step_log, "write per-step norms");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (conv->parsed())
            return run_convergence(conv_opts);
        if (stab->parsed())
            return run_stability(stab_opts);
        return run_single(single_opts, dump_state, dump_mesh, step_log);
    } catch (const frachdg::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
