#pragma once

/**
 * @file link.hpp
 * @brief One key block end to end: PM3 scan, sync window, data pulses through
 * the channel, then the Alice/Bob sessions over an in-process transport.
 */

#include <cstdint>
#include <optional>
#include <vector>

#include "dqkd/channel.hpp"
#include "dqkd/session.hpp"
#include "dqkd/sync.hpp"

namespace dqkd {

/// Pointing fade sampled at a fixed period and replayed cyclically.
struct FadeSeries {
    std::vector<double> fade;  ///< each in (0, 1]
    double dt_s = 0.0;

    /// 1 when empty.
    double at(double t_s) const;
    double mean() const;
};

struct LinkSetup {
    ChannelParams channel;
    SessionOptions protocol;      ///< protocol.session.block_size is the real N
    SyncConfig sync;
    ModulationConfig modulation;
    std::size_t simulated_pulses = 1'000'000;
    double block_duration_s = 10.0;
    FadeSeries fade;

    /// Simulated time per simulated pulse.
    double pulse_dt() const { return block_duration_s / static_cast<double>(simulated_pulses); }
};

/// Independent random streams, one per physical subsystem, so that changing
/// one subsystem's parameters leaves every other draw untouched.
struct LinkStreams {
    Rng modulation;
    Rng channel;
    Rng drift;
    Rng receiver;
    Rng sync;
    Rng alice;
    Rng bob;

    static LinkStreams derive(std::uint64_t seed, std::uint64_t block_index);
    static LinkStreams noiseless(std::uint64_t seed, std::uint64_t block_index);
};

struct BlockResult {
    std::size_t index = 0;
    double time_s = 0.0;
    SessionPhase alice_phase = SessionPhase::Sync;
    SessionPhase bob_phase = SessionPhase::Sync;
    AbortReason reason = AbortReason::None;
    std::optional<CovarianceEstimate> estimate;
    std::optional<KeyRateReport> report;
    std::size_t key_bits = 0;
    bool keys_match = false;
    double scan_phase = 0.0;
    SyncDecision sync;
    SaturationCounter saturation;
    double mean_fade = 1.0;

    bool done() const {
        return alice_phase == SessionPhase::Done && bob_phase == SessionPhase::Done;
    }
};

/// Runs one block starting at `start_time_s`; `state` carries drift across blocks.
BlockResult run_block(const LinkSetup& setup, ChannelState& state, LinkStreams& streams,
                      std::size_t index, double start_time_s);

}  // namespace dqkd
