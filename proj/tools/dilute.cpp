// dilute: command line front end.
//
//   dilute <scatter|check|upper|lower|sweep> --config exp.ini [--out result.csv]

#include "dilute/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Dilute Bose gas energy bounds: scattering, trial-state VMC and lower-bound tables"};
    app.set_version_flag("--version", dilute::version);
    app.require_subcommand(1);

    std::string config_path, out_path;
    for (const auto& name : dilute::subcommands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--out", out_path, "output file (overrides [output] path; '-' for stdout)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : dilute::exit_error;
    }
    const std::string subcommand = app.get_subcommands().front()->get_name();

    std::ifstream file(config_path, std::ios::binary);
    if (!file) {
        std::cerr << "error: Io: cannot read " << config_path << '\n';
        return dilute::exit_error;
    }
    std::ostringstream text;
    text << file.rdbuf();

    dilute::ExperimentConfig config;
    try {
        config = dilute::parse_config(text.str());
    } catch (const dilute::ConfigError& e) {
        for (const auto& issue : e.issues()) {
            std::cerr << config_path;
            if (issue.line > 0) std::cerr << ':' << issue.line;
            std::cerr << ": " << dilute::to_string(issue.kind) << ": " << issue.message << '\n';
        }
        return dilute::exit_error;
    }
    if (out_path == "-") config.output_path.clear();
    else if (!out_path.empty()) config.output_path = out_path;

    return dilute::run(config, subcommand, std::cout, std::cerr, true);
}
