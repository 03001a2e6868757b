#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hypocx/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Degenerate Cauchy-type operator T_Z: verification suites and solvers"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", hypocx::cli::version);

    hypocx::cli::RunOptions opt;
    for (const auto& name : hypocx::cli::subcommands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("-c,--config", opt.config_path, "config file (key = value lines)")->required();
        sub->add_option("-o,--out", opt.out_dir, "output directory for CSVs and manifest.json")
            ->capture_default_str();
        sub->add_option("-j,--threads", opt.threads, "worker threads, 0 = hardware concurrency")
            ->capture_default_str();
        sub->add_option("--seed", opt.seed, "seed for randomized probes")->capture_default_str();
        sub->callback([&opt, name] { opt.subcommand = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return hypocx::cli::run(opt, std::cerr);
}
