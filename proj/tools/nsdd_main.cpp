#include "nsdd/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"nsdd: optimisation-based domain decomposition for 2D incompressible flow"};
    app.require_subcommand(1);

    std::string config_path, mode, out;
    std::uint64_t seed = 0;
    int workers = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--mode", mode, "coupling mode: FFF|FRF|FRR|RRR");
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "training RNG seed");
        sub->add_option("--workers", workers, "offline worker threads");
    };
    CLI::App* offline = app.add_subcommand("offline", "snapshot runs + reduced basis build");
    CLI::App* online = app.add_subcommand("online", "one coupling mode at the test parameter");
    CLI::App* compare = app.add_subcommand("compare", "all four modes + CSV/SVG comparison");
    CLI::App* validate = app.add_subcommand("validate", "FD-gradient and oracle suites");
    for (CLI::App* sub : {offline, online, compare, validate}) add_common(sub);

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

    nsdd::cli::RunConfig config;
    try {
        if (!config_path.empty()) config = nsdd::cli::load_config(config_path);
        if (!mode.empty()) nsdd::cli::apply_config_entry(config, "mode", mode);
        if (!out.empty()) nsdd::cli::apply_config_entry(config, "out", out);
        if (seed != 0) config.seed = seed;
        if (workers != 0) nsdd::cli::apply_config_entry(config, "workers",
                                                        std::to_string(workers));
        config.validate();
    } catch (const nsdd::cli::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (offline->parsed()) return nsdd::cli::cmd_offline(config);
    if (online->parsed()) return nsdd::cli::cmd_online(config);
    if (compare->parsed()) return nsdd::cli::cmd_compare(config);
    return nsdd::cli::cmd_validate(config);
}
