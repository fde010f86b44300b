#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "config.hpp"
#include "qfragile/linalg.hpp"
#include "runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

int cmd_validate(const std::string& path) {
    using namespace qfragile::cli;
    Json config;
    try {
        config = load_config(path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    const auto violations = validate_config(config);
    for (const auto& v : violations) {
        std::cout << v << '\n';
    }
    if (violations.empty()) {
        std::cout << "ok: no violations\n";
        return kExitOk;
    }
    return kExitConfig;
}

int cmd_run(const std::string& path, const qfragile::cli::RunOptions& options) {
    using namespace qfragile::cli;
    try {
        const auto res = run_experiment(load_config(path), options);
        std::cout << "wrote " << res.csv.string() << " (" << res.rows << " rows)\n"
                  << "wrote " << res.manifest.string() << '\n';
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const qfragile::ValidationError& e) {
        std::cerr << "error: invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const qfragile::NumericalError& e) {
        std::cerr << "numerical failure in " << e.module() << "::" << e.operation() << ": " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fisher-information fragility experiments"};
    app.set_version_flag("--version", qfragile::cli::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out-dir", out_dir, "directory for the CSV and manifest");
    run->add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    run->add_option("--seed", seed, "master seed override");

    auto* validate = app.add_subcommand("validate", "list schema violations without running");
    validate->add_option("--config", config_path, "experiment config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (*validate) {
        return cmd_validate(config_path);
    }
    qfragile::cli::RunOptions options;
    options.out_dir = out_dir;
    options.threads = threads;
    options.seed = seed;
    return cmd_run(config_path, options);
}
