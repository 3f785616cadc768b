#include "dqkd/wire.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace dqkd {

namespace {

class Writer {
public:
    explicit Writer(std::size_t reserve = 0) { buf_.reserve(reserve); }

    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
    }
    void u64(std::uint64_t v) {
        for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> b, const char* what) : b_(b), what_(what) {}

    std::uint8_t u8() {
        need(1);
        return b_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | b_[pos_++];
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | b_[pos_++];
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto out = b_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::size_t remaining() const { return b_.size() - pos_; }

    void finish() const {
        if (remaining() != 0)
            throw WireError(std::string(what_) + ": " + std::to_string(remaining()) + " trailing bytes");
    }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw WireError(std::string(what_) + ": truncated");
    }

    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
    const char* what_;
};

std::uint64_t packed_bytes(std::uint64_t bits) { return bits / 8 + (bits % 8 != 0 ? 1 : 0); }

}  // namespace

const char* to_string(MessageKind kind) {
    switch (kind) {
        case MessageKind::SyncAnnounce: return "SyncAnnounce";
        case MessageKind::RevealIndices: return "RevealIndices";
        case MessageKind::RevealValues: return "RevealValues";
        case MessageKind::EstimateAck: return "EstimateAck";
        case MessageKind::ReconcileBlock: return "ReconcileBlock";
        case MessageKind::PaSeed: return "PaSeed";
        case MessageKind::KeyConfirm: return "KeyConfirm";
    }
    return "?";
}

std::vector<std::uint8_t> serialize(const SessionMessage& msg) {
    if (msg.payload.size() > UINT32_MAX) throw WireError("payload exceeds 4 GiB");
    Writer w(kFrameHeaderBytes + msg.payload.size());
    w.u8(static_cast<std::uint8_t>(msg.kind));
    w.u32(msg.sequence);
    w.u32(static_cast<std::uint32_t>(msg.payload.size()));
    w.bytes(msg.payload);
    return w.take();
}

SessionMessage parse(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "frame");
    SessionMessage msg;
    const std::uint8_t kind = r.u8();
    if (kind < 1 || kind > 7) throw WireError("frame: unknown kind " + std::to_string(kind));
    msg.kind = static_cast<MessageKind>(kind);
    msg.sequence = r.u32();
    const std::uint32_t len = r.u32();
    if (r.remaining() != len)
        throw WireError("frame: length field " + std::to_string(len) + " but " +
                        std::to_string(r.remaining()) + " payload bytes");
    auto body = r.bytes(len);
    msg.payload.assign(body.begin(), body.end());
    return msg;
}

std::vector<std::uint8_t> encode_sync_announce(const SyncAnnouncePayload& p) {
    Writer w(12);
    w.u32(p.offset);
    w.u64(p.block_pulses);
    return w.take();
}

SyncAnnouncePayload decode_sync_announce(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "SyncAnnounce");
    SyncAnnouncePayload p;
    p.offset = r.u32();
    p.block_pulses = r.u64();
    r.finish();
    return p;
}

std::vector<std::uint8_t> encode_reveal_indices(std::span<const std::uint32_t> indices) {
    Writer w(4 * indices.size());
    for (std::uint32_t i : indices) w.u32(i);
    return w.take();
}

std::vector<std::uint32_t> decode_reveal_indices(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % 4 != 0) throw WireError("RevealIndices: length not a multiple of 4");
    Reader r(bytes, "RevealIndices");
    std::vector<std::uint32_t> out(bytes.size() / 4);
    for (auto& v : out) v = r.u32();
    return out;
}

std::vector<std::uint8_t> encode_reveal_values(std::span<const QuadraturePair> values) {
    Writer w(16 * values.size());
    for (const QuadraturePair& q : values) {
        w.f64(q.x);
        w.f64(q.p);
    }
    return w.take();
}

std::vector<QuadraturePair> decode_reveal_values(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % 16 != 0) throw WireError("RevealValues: length not a multiple of 16");
    Reader r(bytes, "RevealValues");
    std::vector<QuadraturePair> out(bytes.size() / 16);
    for (auto& q : out) {
        q.x = r.f64();
        q.p = r.f64();
    }
    return out;
}

std::vector<std::uint8_t> encode_estimate_ack(const EstimateAckPayload& p) {
    Writer w(41);
    w.u8(p.status);
    w.f64(p.t_hat);
    w.f64(p.xi_hat);
    w.f64(p.t_lo);
    w.f64(p.xi_hi);
    w.u64(p.target_bits);
    return w.take();
}

EstimateAckPayload decode_estimate_ack(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "EstimateAck");
    EstimateAckPayload p;
    p.status = r.u8();
    if (p.status > 1) throw WireError("EstimateAck: status must be 0 or 1");
    p.t_hat = r.f64();
    p.xi_hat = r.f64();
    p.t_lo = r.f64();
    p.xi_hi = r.f64();
    p.target_bits = r.u64();
    r.finish();
    return p;
}

std::vector<std::uint8_t> encode_reconcile(const ReconcilePayload& p) {
    if (p.packed.size() != packed_bytes(p.bit_count))
        throw WireError("ReconcileBlock: packed size does not match bit count");
    Writer w(8 + p.packed.size());
    w.u64(p.bit_count);
    w.bytes(p.packed);
    return w.take();
}

ReconcilePayload decode_reconcile(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "ReconcileBlock");
    ReconcilePayload p;
    p.bit_count = r.u64();
    if (r.remaining() != packed_bytes(p.bit_count))
        throw WireError("ReconcileBlock: packed size does not match bit count");
    auto body = r.bytes(r.remaining());
    p.packed.assign(body.begin(), body.end());
    return p;
}

std::vector<std::uint8_t> encode_pa_seed(const std::array<std::uint8_t, 32>& seed) {
    return {seed.begin(), seed.end()};
}

std::array<std::uint8_t, 32> decode_pa_seed(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != 32) throw WireError("PaSeed: payload must be exactly 32 bytes");
    std::array<std::uint8_t, 32> seed{};
    std::copy(bytes.begin(), bytes.end(), seed.begin());
    return seed;
}

std::vector<std::uint8_t> encode_key_confirm(const KeyConfirmPayload& p) {
    Writer w(16);
    w.u64(p.key_bits);
    w.u64(p.digest);
    return w.take();
}

KeyConfirmPayload decode_key_confirm(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "KeyConfirm");
    KeyConfirmPayload p;
    p.key_bits = r.u64();
    p.digest = r.u64();
    r.finish();
    return p;
}

}  // namespace dqkd
