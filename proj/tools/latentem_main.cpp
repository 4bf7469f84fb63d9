// Apache License, Version 2.0, refer to LICENSE.txt

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "latentem/latentem.hpp"

namespace {

using latentem::Command;
using latentem::InputFormat;
using latentem::RunConfig;

void add_common_options(CLI::App& sub, RunConfig& config, std::string& format,
                        bool fitting) {
    sub.add_option("--input", config.input_path, "input file")->required();
    sub.add_option("--format", format, "input format: csv, edgelist or text")
        ->check(CLI::IsMember({"csv", "edgelist", "text"}));
    if (fitting) {
        sub.add_option("--m", config.m, "number of groups")->required();
        sub.add_option("--restarts", config.restarts, "independent restarts (default 10)");
        sub.add_option("--seed", config.seed, "base seed; restart r uses seed + r");
        sub.add_option("--max-iter", config.max_iter, "iteration cap (default 5000)");
        sub.add_option("--tol", config.tol,
                       "relative divergence change for convergence (default 1e-10)");
        sub.add_option("--out", config.output_dir,
                       "output directory for model.json, report.json and traces")
            ->required();
    } else {
        sub.add_option("--out", config.output_dir, "optional directory for inspect.json");
    }
}

InputFormat parse_format(const std::string& name) {
    if (name == "csv") return InputFormat::csv;
    if (name == "edgelist") return InputFormat::edgelist;
    return InputFormat::text;
}

void print_fit_summary(const latentem::FitReport& result) {
    std::cout << "best divergence " << result.best_kl << " (restart "
              << result.best_restart << " of " << result.per_restart_kl.size() << ")\n";
    const auto& best = result.traces[static_cast<std::size_t>(result.best_restart)];
    std::cout << "iterations " << best.iterations_run << ", "
              << (best.converged ? "converged" : "stopped at iteration cap") << "\n";
    for (const auto& path : result.written_files)
        std::cout << "wrote " << path.string() << "\n";
}

void print_inspect(const latentem::Json& info) {
    std::cout << "table " << info["rows"] << " x " << info["cols"] << "\n";
    if (info.contains("spectral")) {
        const auto& spectral = info["spectral"];
        std::cout << "symmetric " << spectral["is_symmetric"] << ", diffusive "
                  << spectral["is_diffusive"] << ", min eigenvalue "
                  << spectral["min_eigenvalue"] << "\n";
        std::cout << "margin homogeneity deviation " << spectral["mh_deviation"] << "\n";
        const auto& bounds = info["lambda_bounds"];
        std::cout << "inflation bounds: nonneg " << bounds["nonneg"] << ", psd "
                  << bounds["psd"];
        if (bounds["of_symmetrized"].get<bool>()) std::cout << " (of the symmetrized table)";
        std::cout << "\n";
    }
    std::cout << "rank estimate " << info["rank_estimate"] << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent, co-latent and network clustering of contingency tables"};
    app.require_subcommand(1);

    RunConfig config;
    std::string format = "csv";
    std::string variant = "general";

    auto* fit_latent = app.add_subcommand("fit-latent", "latent clustering of a table");
    add_common_options(*fit_latent, config, format, true);

    auto* fit_colatent =
        app.add_subcommand("fit-colatent", "co-clustering with separate row/column groups");
    add_common_options(*fit_colatent, config, format, true);
    fit_colatent->add_option("--m2", config.m2, "column group count (default: --m)");

    auto* fit_network =
        app.add_subcommand("fit-network", "membership clustering of a weighted network");
    add_common_options(*fit_network, config, format, true);
    fit_network->add_option("--lambda", config.lambda,
                            "diagonal inflation factor >= 1 (default 1)");

    auto* fit_network_co =
        app.add_subcommand("fit-network-co", "shared-emission co-clustering of a network");
    add_common_options(*fit_network_co, config, format, true);
    fit_network_co->add_option("--variant", variant, "general, symmetric or mh")
        ->check(CLI::IsMember({"general", "symmetric", "mh"}));

    auto* inspect = app.add_subcommand("inspect", "diagnostics of an input table");
    add_common_options(*inspect, config, format, false);

    CLI11_PARSE(app, argc, argv);

    config.input_format = parse_format(format);
    try {
        if (fit_latent->parsed()) {
            config.command = Command::fit_latent;
        } else if (fit_colatent->parsed()) {
            config.command = Command::fit_colatent;
        } else if (fit_network->parsed()) {
            config.command = Command::fit_network;
        } else if (fit_network_co->parsed()) {
            config.command = Command::fit_network_co;
            config.variant = latentem::variant_from_string(variant);
        } else {
            config.command = Command::inspect;
            print_inspect(latentem::run_inspect(config));
            return 0;
        }
        print_fit_summary(latentem::run(config));
    } catch (const latentem::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
