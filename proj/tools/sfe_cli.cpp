#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
    using namespace sfe::cli;
    CLI::App app{"sfe: collective capital field solver"};
    app.require_subcommand(1);

    CommonArgs common;
    for (int i = 0; i < argc; ++i) common.argv.emplace_back(argv[i]);
    StabilityArgs st;
    DynamicsArgs dy;
    AbmArgs ab;
    SweepArgs sw;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", common.scenario, "scenario file")->required();
        sub->add_option("--out", common.out, "output directory")->required();
        sub->add_option("--format", common.format, "tabular output: csv or json");
        sub->add_option("--threads", common.threads, "worker threads (default $SFE_THREADS or 1)");
        sub->add_option("--max-iter", common.max_iter, "solver iteration cap");
    };

    auto* solve = app.add_subcommand("solve", "solve the collective state");
    add_common(solve);

    auto* stab = app.add_subcommand("stability", "local stability patterns");
    add_common(stab);
    stab->add_flag("--sensitivities", st.sensitivities, "add dK/dY and dK/df columns");

    auto* dyn = app.add_subcommand("dynamics", "dispersion relation and regime verdicts");
    add_common(dyn);
    dyn->add_option("--g-range", dy.g_range, "wave numbers lo:hi:n");
    dyn->add_flag("--full-matrix", dy.full_matrix, "keep second-order kernel entries");

    auto* abm = app.add_subcommand("abm", "agent simulation against the field solution");
    add_common(abm);
    abm->add_option("--seeds", ab.seeds, "independent seeds 0..n-1");
    abm->add_option("--steps", ab.steps, "recorded steps after burn-in");
    abm->add_option("--burn-in", ab.burn_in, "discarded initial steps");
    abm->add_option("--dt", ab.dt, "time step");

    auto* sweep = app.add_subcommand("sweep", "re-solve over a list of parameter values");
    add_common(sweep);
    sweep->add_option("--param", sw.param, "structural parameter name")->required();
    sweep->add_option("--values", sw.values, "comma-separated values")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (solve->parsed()) {
        common.command = "solve";
        return cmd_solve(common);
    }
    if (stab->parsed()) {
        common.command = "stability";
        return cmd_stability(common, st);
    }
    if (dyn->parsed()) {
        common.command = "dynamics";
        return cmd_dynamics(common, dy);
    }
    if (abm->parsed()) {
        common.command = "abm";
        return cmd_abm(common, ab);
    }
    common.command = "sweep";
    return cmd_sweep(common, sw);
}
