// bhd: run a scenario config and write CSV data plus a run.json sidecar.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bhd/errors.hpp"
#include "bhd/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int default_threads() {
    if (const char* env = std::getenv("BHD_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring BHD_THREADS='" << env << "'\n";
    }
    return 1;
}

nlohmann::json error_payload(const bhd::NumericalError& e) {
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [k, v] : e.details()) d[k] = v;
    return {{"error", bhd::to_string(e.kind())}, {"message", e.what()}, {"details", d}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driven Bose-Hubbard dimer workbench"};
    app.set_version_flag("--version", bhd::software_version());
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the scenario described by a TOML or JSON config");
    std::string config_path;
    std::string output_dir;
    int threads = 0;
    std::uint64_t seed = 0;
    bool dry_run = false;
    run->add_option("config", config_path, "Config file (.toml or .json)")->required();
    run->add_option("--output-dir", output_dir, "Overrides output.directory");
    auto* threads_opt = run->add_option("--threads", threads, "Worker threads (default: BHD_THREADS or 1)")
                            ->check(CLI::PositiveNumber);
    auto* seed_opt = run->add_option("--seed", seed, "Overrides numerics.master_seed");
    run->add_flag("--dry-run", dry_run, "Validate the config and print the resolved plan");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        nlohmann::json tree = bhd::load_config_tree(config_path);
        if (!tree.is_object()) throw bhd::ConfigError("", "config root must be a table");
        if (!output_dir.empty()) tree["output"]["directory"] = output_dir;
        if (*seed_opt) tree["numerics"]["master_seed"] = seed;
        if (*threads_opt) tree["threads"] = threads;
        else if (!tree.contains("threads")) tree["threads"] = default_threads();

        const bhd::ScenarioConfig cfg = bhd::parse_config(tree);
        if (dry_run) {
            std::cout << cfg.resolved.dump(2) << "\n";
            return 0;
        }
        const bhd::RunSummary summary = bhd::run_scenario(cfg);
        for (const auto& f : summary.files) std::cout << f.string() << "\n";
        std::cout << (cfg.output_dir / "run.json").string() << "\n";
        return 0;
    } catch (const bhd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const bhd::NumericalError& e) {
        std::cerr << error_payload(e).dump() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
