#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bsdegame/cli.hpp"

int main(int argc, char** argv) {
    namespace cli = bsdegame::cli;

    CLI::App app{"Batch solver for two-player nonzero-sum stochastic differential games with BSDE payoffs"};
    app.set_version_flag("--version", std::string(BSDEGAME_VERSION));

    std::string command;
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool quiet = false;

    std::string commands;
    for (const auto& name : cli::command_names()) commands += (commands.empty() ? "" : ", ") + name;
    app.add_option("command", command, "One of: " + commands)
        ->required()
        ->check(CLI::IsMember(cli::command_names()));
    auto* config_opt = app.add_option("--config", config_path, "Path to the JSON run configuration");
    auto* out_opt = app.add_option("--out", out_dir, "Output directory (overrides BSDEGAME_OUT and the config)");
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config)");
    app.add_flag("--quiet", quiet, "Suppress progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kExitUsage;
    }

    cli::RunOverrides overrides;
    if (*config_opt) overrides.config_path = config_path;
    if (*out_opt) overrides.out_dir = out_dir;
    if (*seed_opt) overrides.seed = seed;
    overrides.quiet = quiet;
    return cli::run(command, overrides, std::cout, std::cerr);
}
