#include "spreadband/cli.hpp"
#include "spreadband/errors.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <string>

namespace {

struct CommandArgs {
    std::string config_path;
    spreadband::cli::Options options;
};

void add_common(CLI::App* sub, CommandArgs& args) {
    sub->add_option("--config", args.config_path, "flat key=value config file")->required();
    sub->add_option("--out", args.options.out_path, "CSV output path");
    sub->add_option("--seed", args.options.seed, "RNG seed override");
    sub->add_option("--grid", args.options.grid_n, "grid size override");
    sub->add_option("--paths", args.options.paths, "Monte-Carlo path count override");
    sub->add_option("--horizon", args.options.horizon, "simulation horizon override");
    sub->add_option("--dt", args.options.dt, "simulation time step override");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"switching thresholds for mean-reverting spread trading"};
    app.require_subcommand(1);

    using Runner = std::function<int(const spreadband::cli::RunConfig&,
                                     const spreadband::cli::Options&, std::ostream&)>;
    struct Cmd {
        const char* name;
        const char* help;
        Runner run;
    };
    const Cmd cmds[] = {
        {"solve", "compute switching thresholds and value-function coefficients",
         spreadband::cli::run_solve},
        {"verify", "check smooth-fit and variational-inequality residuals",
         spreadband::cli::run_verify},
        {"oracle", "cross-validate against the finite-difference solver",
         spreadband::cli::run_oracle},
        {"simulate", "Monte-Carlo estimate of the strategy gain", spreadband::cli::run_simulate},
        {"sweep", "thresholds as one parameter sweeps a range", spreadband::cli::run_sweep},
    };

    CommandArgs args[std::size(cmds)];
    CLI::App* subs[std::size(cmds)];
    for (size_t i = 0; i < std::size(cmds); ++i) {
        subs[i] = app.add_subcommand(cmds[i].name, cmds[i].help);
        add_common(subs[i], args[i]);
    }

    CLI11_PARSE(app, argc, argv);

    for (size_t i = 0; i < std::size(cmds); ++i) {
        if (!subs[i]->parsed()) continue;
        try {
            const auto cfg = spreadband::cli::RunConfig::load(args[i].config_path);
            return cmds[i].run(cfg, args[i].options, std::cout);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return spreadband::cli::exit_code_for(e);
        }
    }
    return 2;
}
