// dqkd: run, list and validate link scenarios.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 validation failure,
// 3 every block aborted.

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "dqkd/scenario.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNoBlocks = 3;

std::filesystem::path resolve_out_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("DQKD_OUT_DIR"); env && *env) return env;
    return "out";
}

int cmd_run(const std::string& file, std::optional<std::uint64_t> seed, const std::string& out, bool exact) {
    dqkd::ScenarioConfig cfg;
    try {
        cfg = dqkd::load_scenario(file);
    } catch (const dqkd::ScenarioError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    }
    dqkd::RunOptions opts;
    opts.seed = seed;
    opts.exact_counts = exact;
    const dqkd::ScenarioReport rep = dqkd::run_scenario(cfg, opts);
    for (const auto& p : dqkd::emit_report(rep, resolve_out_dir(out))) std::cout << "wrote " << p.string() << '\n';
    std::cout << rep.name << ": " << rep.blocks_done() << "/" << rep.blocks.size()
              << " blocks done, mean key rate " << dqkd::format_double(rep.mean_key_rate_bps / 1e3) << " kbps\n";
    if (!rep.blocks.empty() && rep.blocks_done() == 0) return kExitNoBlocks;
    return 0;
}

int cmd_list() {
    for (const auto& p : dqkd::list_bundled_scenarios()) {
        try {
            const auto cfg = dqkd::load_scenario(p);
            std::cout << cfg.name << '\t' << p.string() << '\t' << dqkd::format_double(cfg.channel.loss_db)
                      << " dB\n";
        } catch (const dqkd::ScenarioError& e) {
            std::cout << p.filename().string() << "\tINVALID\t" << e.what() << '\n';
        }
    }
    return 0;
}

int cmd_validate(const std::string& file) {
    try {
        const auto cfg = dqkd::load_scenario(file);
        std::cout << cfg.name << ": ok (" << cfg.block_count() << " blocks of " << cfg.block_pulses()
                  << " pulses)\n";
        return 0;
    } catch (const dqkd::ScenarioError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Drone-to-ground CV-QKD link simulator"};
    app.require_subcommand(1);

    std::string run_file, out_dir, validate_file;
    std::uint64_t seed = 0;
    bool exact = false;
    auto* run = app.add_subcommand("run", "Run a scenario and write its reports");
    run->add_option("scenario", run_file, "Scenario file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--out", out_dir, "Output directory (default: $DQKD_OUT_DIR or ./out)");
    run->add_flag("--exact-counts", exact, "Simulate every pulse instead of a scaled subsample");

    app.add_subcommand("list", "List the bundled scenarios");
    auto* val = app.add_subcommand("validate", "Check a scenario file");
    val->add_option("scenario", validate_file, "Scenario file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            std::optional<std::uint64_t> s;
            if (*seed_opt) s = seed;
            return cmd_run(run_file, s, out_dir, exact);
        }
        if (app.got_subcommand("list")) return cmd_list();
        if (*val) return cmd_validate(validate_file);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
