#pragma once

/**
 * @file wire.hpp
 * @brief Byte-exact framing of classical session messages.
 *
 * Frame layout (all integers big-endian):
 *   kind : u8     (1..7, see MessageKind)
 *   seq  : u32
 *   len  : u32    payload length in bytes
 *   payload[len]
 */

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dqkd/stokes.hpp"

namespace dqkd {

enum class MessageKind : std::uint8_t {
    SyncAnnounce = 1,
    RevealIndices = 2,
    RevealValues = 3,
    EstimateAck = 4,
    ReconcileBlock = 5,
    PaSeed = 6,
    KeyConfirm = 7,
};

const char* to_string(MessageKind kind);

struct SessionMessage {
    MessageKind kind = MessageKind::SyncAnnounce;
    std::uint32_t sequence = 0;
    std::vector<std::uint8_t> payload;

    bool operator==(const SessionMessage&) const = default;
};

inline constexpr std::size_t kFrameHeaderBytes = 9;

class WireError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> serialize(const SessionMessage& msg);

/// Parses exactly one frame; trailing bytes, short input, an unknown kind
/// or a length mismatch throw WireError.
SessionMessage parse(std::span<const std::uint8_t> bytes);

// Payload codecs. Each decode_* throws WireError on a malformed payload.

struct SyncAnnouncePayload {
    std::uint32_t offset = 0;      ///< slot of the first pattern bit within the sync window
    std::uint64_t block_pulses = 0;
    bool operator==(const SyncAnnouncePayload&) const = default;
};

struct EstimateAckPayload {
    std::uint8_t status = 0;  ///< 1 = key possible, 0 = abort with no key
    double t_hat = 0.0;
    double xi_hat = 0.0;
    double t_lo = 0.0;
    double xi_hi = 0.0;
    std::uint64_t target_bits = 0;
    bool operator==(const EstimateAckPayload&) const = default;
};

struct ReconcilePayload {
    std::uint64_t bit_count = 0;
    std::vector<std::uint8_t> packed;  ///< MSB-first
    bool operator==(const ReconcilePayload&) const = default;
};

struct KeyConfirmPayload {
    std::uint64_t key_bits = 0;
    std::uint64_t digest = 0;
    bool operator==(const KeyConfirmPayload&) const = default;
};

std::vector<std::uint8_t> encode_sync_announce(const SyncAnnouncePayload& p);
SyncAnnouncePayload decode_sync_announce(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_reveal_indices(std::span<const std::uint32_t> indices);
std::vector<std::uint32_t> decode_reveal_indices(std::span<const std::uint8_t> bytes);

/// Packed IEEE-754 binary64 (x, p) pairs.
std::vector<std::uint8_t> encode_reveal_values(std::span<const QuadraturePair> values);
std::vector<QuadraturePair> decode_reveal_values(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_estimate_ack(const EstimateAckPayload& p);
EstimateAckPayload decode_estimate_ack(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_reconcile(const ReconcilePayload& p);
ReconcilePayload decode_reconcile(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_pa_seed(const std::array<std::uint8_t, 32>& seed);
std::array<std::uint8_t, 32> decode_pa_seed(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_key_confirm(const KeyConfirmPayload& p);
KeyConfirmPayload decode_key_confirm(std::span<const std::uint8_t> bytes);

}  // namespace dqkd
