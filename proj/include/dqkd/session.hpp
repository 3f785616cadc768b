#pragma once

/**
 * @file session.hpp
 * @brief Alice and Bob post-processing state machines.
 *
 * Each side consumes local events and received SessionMessages and returns
 * the messages it wants sent. Message order (A = Alice, B = Bob):
 *
 *   A -> B  SyncAnnounce     offset of the sync frame and block length
 *   B -> A  RevealIndices    positions Bob asks Alice to disclose
 *   A -> B  RevealValues     Alice's (x, p) at those positions
 *   B -> A  EstimateAck      channel estimate and target key length
 *   B -> A  ReconcileBlock   Bob's raw key (oracle reconciliation)
 *   A -> B  PaSeed           Toeplitz seed
 *   B -> A  KeyConfirm       final key length and digest
 *
 * Sequence numbers start at 0 in each direction and must arrive without gaps.
 */

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "dqkd/estimation.hpp"
#include "dqkd/keyrate.hpp"
#include "dqkd/privacy.hpp"
#include "dqkd/rng.hpp"
#include "dqkd/wire.hpp"

namespace dqkd {

enum class SessionPhase { Sync, Transmit, Measure, Reveal, Estimate, Reconcile, Amplify, Done, Aborted };

enum class AbortReason {
    None,
    Transport,     ///< sequence gap or undecodable frame
    NoKey,         ///< estimate leaves no positive key
    Protocol,      ///< event or message illegal in the current phase
    Sync,          ///< the two sides disagree on the sync offset
    Verification,  ///< key confirmation digest mismatch
};

const char* to_string(SessionPhase phase);
const char* to_string(AbortReason reason);

// Local events.
struct SyncEstablished {
    std::uint32_t offset = 0;
};
struct PulsesSent {
    std::vector<QuadraturePair> sent;  ///< launched (s2, s3) per data pulse
};
struct PulsesMeasured {
    std::vector<QuadraturePair> measured;  ///< heterodyne (s2, s3) per data pulse
};
struct MessageReceived {
    SessionMessage message;
};

using AliceEvent = std::variant<SyncEstablished, PulsesSent, MessageReceived>;
using BobEvent = std::variant<SyncEstablished, PulsesMeasured, MessageReceived>;

struct SessionOptions {
    SessionConfig session;  ///< block_size is the real pulse count N
    ReceiverConfig receiver;
    bool compensation = true;
    std::size_t compensation_window = 10'000;  ///< revealed pairs per rotation estimate
    /// Real pulses represented by one simulated pulse; estimates are rescaled by it.
    double count_scale = 1.0;
    double z = kConfidenceZ;
};

/// Outcome fields filled in as the session progresses.
struct SessionOutcome {
    std::optional<CovarianceEstimate> estimate;
    std::optional<KeyRateReport> report;
    std::vector<double> compensation_angles;  ///< one per window
    BitString key;
    std::size_t corrected_bits = 0;
    std::uint64_t digest = 0;
};

class SessionBase {
public:
    SessionPhase phase() const { return phase_; }
    AbortReason abort_reason() const { return reason_; }
    const SessionOutcome& outcome() const { return outcome_; }

protected:
    SessionMessage make_message(MessageKind kind, std::vector<std::uint8_t> payload);
    /// Enforces the gap-free sequence; false after aborting.
    bool accept_sequence(const SessionMessage& msg);
    void abort(AbortReason reason);

    SessionPhase phase_ = SessionPhase::Sync;
    AbortReason reason_ = AbortReason::None;
    SessionOutcome outcome_;
    std::uint32_t next_out_ = 0;
    std::uint32_t next_in_ = 0;
};

class AliceSession : public SessionBase {
public:
    AliceSession(SessionOptions opts, Rng rng);

    std::vector<SessionMessage> step(AliceEvent event);

private:
    std::vector<SessionMessage> on_message(const SessionMessage& msg);

    SessionOptions opts_;
    Rng rng_;
    std::uint32_t offset_ = 0;
    std::vector<QuadraturePair> sent_;
    std::vector<std::uint8_t> revealed_mask_;
    std::optional<EstimateAckPayload> ack_;
};

class BobSession : public SessionBase {
public:
    BobSession(SessionOptions opts, Rng rng);

    std::vector<SessionMessage> step(BobEvent event);

private:
    std::vector<SessionMessage> on_message(const SessionMessage& msg);
    std::vector<SessionMessage> try_confirm_sync();
    std::vector<SessionMessage> estimate_and_reconcile(const std::vector<QuadraturePair>& values);

    SessionOptions opts_;
    Rng rng_;
    std::optional<std::uint32_t> local_offset_;
    std::optional<SyncAnnouncePayload> announced_;
    std::vector<QuadraturePair> measured_;
    std::vector<std::uint32_t> reveal_indices_;
    BitString raw_;
    std::size_t target_bits_ = 0;
};

/// Draws `count` distinct indices from [0, n) and returns them sorted.
std::vector<std::uint32_t> choose_reveal_indices(std::size_t n, std::size_t count, Rng& rng);

/**
 * Windowed drift compensation. Revealed pairs (sorted by pulse index) are cut
 * into consecutive windows of `window` pairs; each window's rotation is
 * estimated from its own pairs and applied to every pulse from the window's
 * first index up to the next window's first index. Returns the angles.
 */
std::vector<double> compensate_windows(std::span<const std::uint32_t> indices,
                                       std::vector<SamplePair>& revealed,
                                       std::vector<QuadraturePair>& all_measured, std::size_t window);

}  // namespace dqkd
