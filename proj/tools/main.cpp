#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "ilmpc/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Iterative learning-based adaptive MPC simulator"};
    app.require_subcommand(1);

    ilmpc::RunOptions opt;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", opt.scenario_name,
                        "canned scenario name (see `scenarios`)");
        cmd->add_option("--config", opt.config_path, "scenario config file");
        cmd->add_flag("--no-learning", opt.no_learning,
                      "disable the extremum-seeking updates");
        cmd->add_option("--rho", opt.rho, "slack weight override");
        cmd->add_option("--gear", opt.gear, "gear ratio override");
        cmd->add_option("--epsilon-q-factor", opt.epsilon_q_factor,
                        "threshold factor override");
        cmd->add_option("--ne", opt.steps_per_iteration,
                        "steps per learning iteration override");
        cmd->add_option("--max-iterations", opt.max_iterations,
                        "learning iteration cap override");
        cmd->add_option("--fixed-steps", opt.fixed_steps,
                        "step count for non-learning runs");
        cmd->add_option("--dither", opt.dither_overrides,
                        "dither override name:amplitude:omega (repeatable)");
    };

    CLI::App* run = app.add_subcommand("run", "simulate and write artifacts");
    add_common(run);
    run->add_option("--out", opt.output_dir,
                    "output directory (default out/<scenario>)");

    CLI::App* validate =
        app.add_subcommand("validate", "check a configuration without running");
    add_common(validate);

    app.add_subcommand("scenarios", "list the canned scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return ilmpc::cmd_run(opt, std::cout);
        if (validate->parsed()) return ilmpc::cmd_validate(opt, std::cout);
        return ilmpc::cmd_scenarios(std::cout);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
