#include "dqkd/link.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace dqkd {

namespace {

enum Stream : std::uint64_t { kModulation = 1, kChannel, kDrift, kReceiver, kSync, kAlice, kBob };

// Both directions go through serialize/parse so every frame crosses the
// byte boundary exactly as it would between hosts.
void deliver(AliceSession& alice, BobSession& bob, std::vector<SessionMessage> to_bob,
             std::vector<SessionMessage> to_alice) {
    std::deque<SessionMessage> a2b(to_bob.begin(), to_bob.end());
    std::deque<SessionMessage> b2a(to_alice.begin(), to_alice.end());
    while (!a2b.empty() || !b2a.empty()) {
        if (!a2b.empty()) {
            SessionMessage m = parse(serialize(a2b.front()));
            a2b.pop_front();
            for (auto& r : bob.step(MessageReceived{std::move(m)})) b2a.push_back(std::move(r));
        }
        if (!b2a.empty()) {
            SessionMessage m = parse(serialize(b2a.front()));
            b2a.pop_front();
            for (auto& r : alice.step(MessageReceived{std::move(m)})) a2b.push_back(std::move(r));
        }
    }
}

}  // namespace

double FadeSeries::at(double t_s) const {
    if (fade.empty() || !(dt_s > 0.0)) return 1.0;
    const auto k = static_cast<std::size_t>(std::floor(t_s / dt_s));
    return fade[k % fade.size()];
}

double FadeSeries::mean() const {
    if (fade.empty()) return 1.0;
    return std::accumulate(fade.begin(), fade.end(), 0.0) / static_cast<double>(fade.size());
}

LinkStreams LinkStreams::derive(std::uint64_t seed, std::uint64_t block_index) {
    const Rng root(mix_seed(seed, block_index));
    return {root.split(kModulation), root.split(kChannel), root.split(kDrift), root.split(kReceiver),
            root.split(kSync),       root.split(kAlice),   root.split(kBob)};
}

LinkStreams LinkStreams::noiseless(std::uint64_t seed, std::uint64_t block_index) {
    const Rng root = Rng::noiseless(mix_seed(seed, block_index));
    return {root.split(kModulation), root.split(kChannel), root.split(kDrift), root.split(kReceiver),
            root.split(kSync),       root.split(kAlice),   root.split(kBob)};
}

BlockResult run_block(const LinkSetup& setup, ChannelState& state, LinkStreams& streams,
                      std::size_t index, double start_time_s) {
    BlockResult result;
    result.index = index;
    result.time_s = start_time_s;

    const ChannelParams& ch = setup.channel;
    const ReceiverConfig& rcv = setup.protocol.receiver;

    // Sync pulses go through the live channel; the short scan and window are
    // treated as quasi-static with respect to drift.
    const ModulationConfig sync_mod = sync_modulation(setup.sync, setup.modulation);
    const LinkProbe probe = [&](double phi2) {
        const StokesVector s = ideal_stokes_readout(DrivePhases::wrapped(kPi / 2.0, phi2), sync_mod);
        const QuadraturePair rx = propagate({s.s2, s.s3}, state, ch, streams.channel);
        const HeterodyneSample m = heterodyne_measure(rx, rcv, streams.receiver);
        return QuadraturePair{m.s2, m.s3};
    };
    try {
        result.scan_phase = scan_pm3(setup.sync, probe).best_voltage_phase;
    } catch (const ScanFailure&) {
        result.reason = AbortReason::Sync;
        return result;
    }

    const std::size_t slots = setup.sync.window_len;
    const auto planted = static_cast<std::uint32_t>(
        std::floor(streams.sync.uniform() * static_cast<double>(slots - kSyncPatternLength + 1)));
    // Arrival-time jitter moves the frame inside Bob's window by whole pulses,
    // at most two; a nonzero slip surfaces as an offset mismatch.
    const long slip = std::clamp(std::lround(streams.sync.normal(ch.timing_jitter_s * ch.pulse_rate_hz)), -2L, 2L);
    const auto arrival = static_cast<std::size_t>(
        std::clamp(static_cast<long>(planted) + slip, 0L, static_cast<long>(slots - kSyncPatternLength)));
    const auto frame = build_sync_frame(setup.sync, result.scan_phase);
    std::vector<HeterodyneSample> window(slots);
    for (std::size_t i = 0; i < slots; ++i) {
        QuadraturePair tx{};
        if (i >= arrival && i < arrival + kSyncPatternLength) {
            const StokesVector s = ideal_stokes_readout(frame[i - arrival], sync_mod);
            tx = {s.s2, s.s3};
        }
        window[i] = heterodyne_measure(propagate(tx, state, ch, streams.channel), rcv, streams.receiver, i);
    }
    result.sync = detect_sync(window, setup.sync);

    SessionOptions opts = setup.protocol;
    opts.session.pulse_rate_hz = ch.pulse_rate_hz;
    opts.count_scale =
        static_cast<double>(opts.session.block_size) / static_cast<double>(setup.simulated_pulses);
    AliceSession alice(opts, streams.alice);
    BobSession bob(opts, streams.bob);

    auto finish = [&]() {
        result.alice_phase = alice.phase();
        result.bob_phase = bob.phase();
        result.reason = bob.abort_reason() != AbortReason::None ? bob.abort_reason() : alice.abort_reason();
        result.estimate = bob.outcome().estimate;
        result.report = bob.outcome().report;
        result.key_bits = bob.outcome().key.size();
        result.keys_match = alice.outcome().key == bob.outcome().key;
        return result;
    };

    if (!result.sync.matched) {
        result.reason = AbortReason::Sync;
        return result;
    }
    deliver(alice, bob, alice.step(SyncEstablished{planted}), {});
    deliver(alice, bob, {}, bob.step(SyncEstablished{static_cast<std::uint32_t>(result.sync.offset)}));
    if (bob.phase() != SessionPhase::Measure) return finish();

    const std::size_t n = setup.simulated_pulses;
    const double dt = setup.pulse_dt();
    std::vector<QuadraturePair> sent(n);
    std::vector<QuadraturePair> measured(n);
    double fade_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const UniformDraw u{streams.modulation.uniform(), streams.modulation.uniform_open_low()};
        const DrivePhases ph = phases_for_target(sample_gaussian_point(u, setup.modulation),
                                                 setup.modulation, &result.saturation);
        const StokesVector s = ideal_stokes_readout(ph, setup.modulation);
        sent[i] = {s.s2, s.s3};

        state = step_channel(state, ch, streams.drift, dt);
        const double fade = setup.fade.at(start_time_s + static_cast<double>(i) * dt);
        fade_sum += fade;
        const HeterodyneSample m =
            heterodyne_measure(propagate(sent[i], state, ch, streams.channel, fade), rcv, streams.receiver, i);
        measured[i] = {m.s2, m.s3};
    }
    result.mean_fade = fade_sum / static_cast<double>(n);

    deliver(alice, bob, alice.step(PulsesSent{std::move(sent)}), {});
    deliver(alice, bob, {}, bob.step(PulsesMeasured{std::move(measured)}));
    return finish();
}

}  // namespace dqkd
