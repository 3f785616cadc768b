#pragma once

/**
 * @file scenario.hpp
 * @brief Scenario files, seeded end-to-end runs and report emission.
 *
 * File format: one `key = value` per line, dotted section prefixes, `#`
 * starts a comment. Unknown or repeated keys are errors. Only
 * channel.loss_db has no default.
 */

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dqkd/channel.hpp"
#include "dqkd/keyrate.hpp"
#include "dqkd/link.hpp"
#include "dqkd/pat.hpp"
#include "dqkd/session.hpp"
#include "dqkd/sync.hpp"

namespace dqkd {

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Geometry {
    double horizontal_distance_m = 100.0;
    double altitude_m = 0.0;
    double speed_mps = 0.0;
    double heading_min_deg = 90.0;
    double heading_max_deg = 90.0;
    double travel_m = 0.0;

    double range_m() const;
    /// Line-of-sight angular rate of the moving end, urad/s.
    double slew_rate_urad_s() const;
};

struct PatScenario {
    bool enabled = true;
    std::string terminal = "ground";  ///< "ground" or "drone" fine camera
    double beam_divergence_urad = 2000.0;
    bool fine_loop = true;
    double sim_duration_s = 3.0;
    std::vector<Vibration> vibration{{12.0, 80.0}, {47.0, 30.0}};
    double white_jitter_urad = 15.0;
    double initial_error_urad = 5000.0;
};

struct PaperReference {
    std::optional<double> loss_db;
    std::optional<double> transmittance;
    std::optional<double> key_rate_kbps;
};

struct ScenarioConfig {
    std::string name;
    std::uint64_t seed = 1;
    double duration_s = 30.0;
    double block_duration_s = 10.0;
    std::uint64_t simulated_pulses = 1'000'000;
    Geometry geometry;
    ChannelParams channel;
    ReceiverConfig receiver;
    SessionConfig session;
    bool compensation = true;
    std::uint64_t compensation_window = 10'000;
    SyncConfig sync = default_scenario_sync();
    PatScenario pat;
    PaperReference paper;

    static SyncConfig default_scenario_sync();

    std::size_t block_count() const;
    /// Real pulses per block, pulse_rate * block_duration.
    std::uint64_t block_pulses() const;

    /// Throws ScenarioError naming the offending key.
    void validate() const;
};

ScenarioConfig parse_scenario(std::string_view text, const std::string& origin = "<input>");
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Directory holding the bundled fixtures.
std::filesystem::path bundled_scenario_dir();
std::vector<std::filesystem::path> list_bundled_scenarios();

struct BlockRow {
    std::size_t block_index = 0;
    double time_s = 0.0;
    double t_est = 0.0;   ///< t_hat^2 / eta, NaN without an estimate
    double xi_est = 0.0;  ///< NaN without an estimate
    double i_ab = 0.0;
    double chi_be = 0.0;
    double delta_n = 0.0;
    double key_rate_bps = 0.0;
    bool clamped = false;

    bool operator==(const BlockRow& o) const;
};

struct ScenarioReport {
    std::string name;
    std::uint64_t seed = 0;
    bool exact_counts = false;
    std::vector<BlockRow> blocks;
    std::vector<AbortReason> outcomes;  ///< per block, None when done
    double mean_key_rate_bps = 0.0;
    double configured_loss_db = 0.0;
    std::uint64_t saturated = 0;
    std::uint64_t modulated = 0;
    bool pat_enabled = false;
    PatRun pat;
    double mean_fade = 1.0;
    PaperReference paper;

    std::size_t blocks_done() const;
    std::size_t aborts(AbortReason reason) const;
};

struct RunOptions {
    std::optional<std::uint64_t> seed;
    bool exact_counts = false;
};

PatConfig pat_config(const ScenarioConfig& cfg);
LinkSetup link_setup(const ScenarioConfig& cfg, bool exact_counts);

ScenarioReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

void write_blocks_csv(std::ostream& os, const ScenarioReport& report);
std::vector<BlockRow> parse_blocks_csv(std::istream& is);
void write_summary(std::ostream& os, const ScenarioReport& report);

/// Writes <name>_blocks.csv, <name>_pat.csv and <name>_summary.txt; returns the paths.
std::vector<std::filesystem::path> emit_report(const ScenarioReport& report,
                                               const std::filesystem::path& out_dir);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace dqkd
