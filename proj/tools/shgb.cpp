#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "shgb/cli.hpp"

namespace {

void error_record(const char* kind, const std::string& msg)
{
    std::string flat = msg;
    for (auto& ch : flat)
        if (ch == '\n')
            ch = ' ';
    std::cerr << "error," << kind << ",\"" << flat << "\"\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Surface hopping Gaussian beam solver"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SHGB_VERSION);

    std::string config_path;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::string out_dir = "out";
    bool force = false;

    for (const auto& mode : shgb::run_modes()) {
        auto* sub = app.add_subcommand(mode);
        sub->add_option("-c,--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "master seed (overrides run.seed)");
        sub->add_option("--workers", workers, "worker threads")->envname("SHGB_WORKERS")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--force", force, "allow writing into a non-empty output directory");
    }

    CLI11_PARSE(app, argc, argv);
    const auto* sub = app.get_subcommands().front();

    try {
        shgb::RunConfig cfg = shgb::parse_config_file(config_path);
        cfg.mode = sub->get_name();
        if (sub->count("--seed"))
            cfg.seed = seed;
        cfg.workers = workers;
        cfg.out_dir = out_dir;
        cfg.force = force;
        const auto summary = shgb::run(cfg);
        for (const auto& w : summary.warnings)
            std::cerr << "warning: " << w << "\n";
        for (const auto& f : summary.outputs)
            std::cout << out_dir << "/" << f << "\n";
        return summary.status;
    } catch (const shgb::ConfigError& e) {
        error_record("config", e.what());
        return 2;
    } catch (const shgb::NumericalError& e) {
        error_record("numerical", e.what());
        return 3;
    } catch (const std::exception& e) {
        error_record("runtime", e.what());
        return 1;
    }
}
