// delvepo — prompt optimization from the command line.
//
//   delvepo init --config cfg.json [--values-per-type N]   generate value pools
//   delvepo run --config cfg.json [--seed N ...]           optimize, one run per seed
//   delvepo resume --config cfg.json --seed N              pick a run up from its checkpoint
//   delvepo eval PROMPT_FILE --config cfg.json             score a saved prompt on the test split
//   delvepo report --config cfg.json                       tables + curve data from finished runs
//
// Shared flags: --set key.path=value (repeatable), --mock, --out DIR.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <delvepo/cli.hpp>

int main(int argc, char** argv) {
    CLI::App app{"prompt optimization with evolving component memory", "delvepo"};
    app.require_subcommand(1);

    delvepo::CliOptions opts;
    std::string command;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "config file (JSON); defaults apply on top");
        sub->add_option("--set", opts.overrides,
                        "override one config value, e.g. --set evolution.epochs=3")
            ->take_all();
        sub->add_option("--seed", opts.seeds, "run seed; repeat for several runs")->take_all();
        sub->add_flag("--mock", opts.mock, "use the scripted in-process model backend");
        sub->add_option("--out", opts.out_dir, "output directory (default: config output.dir)");
        sub->parse_complete_callback([&, sub] { command = sub->get_name(); });
    };

    auto* init = app.add_subcommand("init", "generate candidate value pools for each component");
    init->add_option("--values-per-type", opts.values_per_type,
                     "candidates per component type (default: config init.values_per_type)");
    add_common(init);

    add_common(app.add_subcommand("run", "run the optimizer, one run per seed"));
    add_common(app.add_subcommand("resume", "continue interrupted runs from their checkpoints"));

    auto* eval = app.add_subcommand("eval", "score a saved prompt file on the held-out test split");
    eval->add_option("prompt_file", opts.prompt_file, "prompt file written by a run")->required();
    add_common(eval);

    add_common(app.add_subcommand("report", "summarize finished runs in one directory"));

    CLI11_PARSE(app, argc, argv);

    try {
        return delvepo::dispatch_command(command, opts, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
