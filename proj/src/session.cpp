#include "dqkd/session.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dqkd {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t simulated_pulses(const SessionOptions& opts) {
    return static_cast<std::uint64_t>(
        std::llround(static_cast<double>(opts.session.block_size) / opts.count_scale));
}

double stddev(std::span<const double> v) {
    if (v.empty()) return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

const char* to_string(SessionPhase phase) {
    switch (phase) {
        case SessionPhase::Sync: return "sync";
        case SessionPhase::Transmit: return "transmit";
        case SessionPhase::Measure: return "measure";
        case SessionPhase::Reveal: return "reveal";
        case SessionPhase::Estimate: return "estimate";
        case SessionPhase::Reconcile: return "reconcile";
        case SessionPhase::Amplify: return "amplify";
        case SessionPhase::Done: return "done";
        case SessionPhase::Aborted: return "aborted";
    }
    return "?";
}

const char* to_string(AbortReason reason) {
    switch (reason) {
        case AbortReason::None: return "none";
        case AbortReason::Transport: return "transport";
        case AbortReason::NoKey: return "no_key";
        case AbortReason::Protocol: return "protocol";
        case AbortReason::Sync: return "sync";
        case AbortReason::Verification: return "verification";
    }
    return "?";
}

SessionMessage SessionBase::make_message(MessageKind kind, std::vector<std::uint8_t> payload) {
    return {kind, next_out_++, std::move(payload)};
}

bool SessionBase::accept_sequence(const SessionMessage& msg) {
    if (msg.sequence != next_in_) {
        abort(AbortReason::Transport);
        return false;
    }
    ++next_in_;
    return true;
}

void SessionBase::abort(AbortReason reason) {
    phase_ = SessionPhase::Aborted;
    reason_ = reason;
}

std::vector<std::uint32_t> choose_reveal_indices(std::size_t n, std::size_t count, Rng& rng) {
    if (count > n) throw std::invalid_argument("cannot reveal more pulses than were sent");
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0U);
    // Partial Fisher-Yates: the first `count` slots become a uniform sample.
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - i));
        std::swap(idx[i], idx[std::min(j, n - 1)]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<double> compensate_windows(std::span<const std::uint32_t> indices,
                                       std::vector<SamplePair>& revealed,
                                       std::vector<QuadraturePair>& all_measured, std::size_t window) {
    if (revealed.size() != indices.size())
        throw std::invalid_argument("revealed pairs and indices differ in length");
    window = std::max(window, kMinCompensationPairs);
    const std::size_t windows = std::max<std::size_t>(1, revealed.size() / window);
    std::vector<double> angles;
    angles.reserve(windows);
    for (std::size_t w = 0; w < windows; ++w) {
        const std::size_t lo = w * window;
        const std::size_t hi = (w + 1 == windows) ? revealed.size() : lo + window;
        const std::span<SamplePair> chunk(revealed.data() + lo, hi - lo);
        const double theta = compensate_polarization(chunk);
        angles.push_back(theta);
        apply_compensation(chunk, theta);

        const std::size_t first = (w == 0) ? 0 : indices[lo];
        const std::size_t last = (w + 1 == windows) ? all_measured.size() : indices[hi];
        for (std::size_t i = first; i < last; ++i) all_measured[i] = rotate(all_measured[i], -theta);
    }
    return angles;
}

// ---------------------------------------------------------------- Alice

AliceSession::AliceSession(SessionOptions opts, Rng rng) : opts_(std::move(opts)), rng_(std::move(rng)) {}

std::vector<SessionMessage> AliceSession::step(AliceEvent event) {
    if (phase_ == SessionPhase::Done || phase_ == SessionPhase::Aborted) return {};
    return std::visit(
        Overloaded{
            [&](SyncEstablished& e) -> std::vector<SessionMessage> {
                if (phase_ != SessionPhase::Sync) {
                    abort(AbortReason::Protocol);
                    return {};
                }
                offset_ = e.offset;
                phase_ = SessionPhase::Transmit;
                return {make_message(MessageKind::SyncAnnounce,
                                     encode_sync_announce({offset_, simulated_pulses(opts_)}))};
            },
            [&](PulsesSent& e) -> std::vector<SessionMessage> {
                if (phase_ != SessionPhase::Transmit || e.sent.size() != simulated_pulses(opts_)) {
                    abort(AbortReason::Protocol);
                    return {};
                }
                sent_ = std::move(e.sent);
                phase_ = SessionPhase::Reveal;
                return {};
            },
            [&](MessageReceived& e) -> std::vector<SessionMessage> {
                if (!accept_sequence(e.message)) return {};
                try {
                    return on_message(e.message);
                } catch (const WireError&) {
                    abort(AbortReason::Transport);
                    return {};
                }
            },
        },
        event);
}

std::vector<SessionMessage> AliceSession::on_message(const SessionMessage& msg) {
    switch (phase_) {
        case SessionPhase::Reveal: {
            if (msg.kind != MessageKind::RevealIndices) break;
            const auto indices = decode_reveal_indices(msg.payload);
            revealed_mask_.assign(sent_.size(), 0);
            std::vector<QuadraturePair> values;
            values.reserve(indices.size());
            for (std::size_t k = 0; k < indices.size(); ++k) {
                if (indices[k] >= sent_.size() || (k > 0 && indices[k] <= indices[k - 1])) {
                    abort(AbortReason::Protocol);
                    return {};
                }
                revealed_mask_[indices[k]] = 1;
                values.push_back(sent_[indices[k]]);
            }
            phase_ = SessionPhase::Estimate;
            return {make_message(MessageKind::RevealValues, encode_reveal_values(values))};
        }
        case SessionPhase::Estimate: {
            if (msg.kind != MessageKind::EstimateAck) break;
            ack_ = decode_estimate_ack(msg.payload);
            if (ack_->status == 0) {
                abort(AbortReason::NoKey);
                return {};
            }
            CovarianceEstimate est;
            est.t_hat = ack_->t_hat;
            est.xi_hat = ack_->xi_hat;
            est.t_lo = ack_->t_lo;
            est.xi_hi = ack_->xi_hi;
            outcome_.estimate = est;
            phase_ = SessionPhase::Reconcile;
            return {};
        }
        case SessionPhase::Reconcile: {
            if (msg.kind != MessageKind::ReconcileBlock) break;
            const ReconcilePayload rp = decode_reconcile(msg.payload);

            // Alice's own estimate of Bob's key-pulse readings, binned on the
            // same grid Bob uses for his nominal variance.
            std::vector<double> scaled;
            scaled.reserve(sent_.size());
            for (std::size_t i = 0; i < sent_.size(); ++i)
                if (!revealed_mask_[i]) scaled.push_back(ack_->t_hat * sent_[i].x);
            const double t2 = ack_->t_hat * ack_->t_hat;
            const double sigma = std::sqrt(t2 * (opts_.session.v1 + ack_->xi_hat) + 1.0 +
                                           opts_.receiver.electronic_noise);
            const BitString own = discretize(scaled, sigma);
            if (rp.bit_count != own.size()) {
                abort(AbortReason::Protocol);
                return {};
            }
            const BitString reconciled = unpack_bits(rp.packed, rp.bit_count);
            for (std::size_t i = 0; i < own.size(); ++i)
                if (own[i] != reconciled[i]) ++outcome_.corrected_bits;

            const PaSeed seed = draw_pa_seed(rng_);
            outcome_.key = amplify(reconciled, ack_->target_bits, seed);
            outcome_.digest = key_digest(outcome_.key);
            phase_ = SessionPhase::Amplify;
            return {make_message(MessageKind::PaSeed, encode_pa_seed(seed))};
        }
        case SessionPhase::Amplify: {
            if (msg.kind != MessageKind::KeyConfirm) break;
            const KeyConfirmPayload kc = decode_key_confirm(msg.payload);
            if (kc.key_bits != outcome_.key.size() || kc.digest != outcome_.digest) {
                abort(AbortReason::Verification);
                return {};
            }
            phase_ = SessionPhase::Done;
            return {};
        }
        default:
            break;
    }
    abort(AbortReason::Protocol);
    return {};
}

// ---------------------------------------------------------------- Bob

BobSession::BobSession(SessionOptions opts, Rng rng) : opts_(std::move(opts)), rng_(std::move(rng)) {}

std::vector<SessionMessage> BobSession::step(BobEvent event) {
    if (phase_ == SessionPhase::Done || phase_ == SessionPhase::Aborted) return {};
    return std::visit(
        Overloaded{
            [&](SyncEstablished& e) -> std::vector<SessionMessage> {
                if (phase_ != SessionPhase::Sync || local_offset_) {
                    abort(AbortReason::Protocol);
                    return {};
                }
                local_offset_ = e.offset;
                return try_confirm_sync();
            },
            [&](PulsesMeasured& e) -> std::vector<SessionMessage> {
                if (phase_ != SessionPhase::Measure || e.measured.size() != announced_->block_pulses) {
                    abort(AbortReason::Protocol);
                    return {};
                }
                measured_ = std::move(e.measured);
                const auto count = static_cast<std::size_t>(
                    std::llround(opts_.session.reveal_fraction * static_cast<double>(measured_.size())));
                reveal_indices_ = choose_reveal_indices(measured_.size(), count, rng_);
                phase_ = SessionPhase::Reveal;
                return {make_message(MessageKind::RevealIndices, encode_reveal_indices(reveal_indices_))};
            },
            [&](MessageReceived& e) -> std::vector<SessionMessage> {
                if (!accept_sequence(e.message)) return {};
                try {
                    return on_message(e.message);
                } catch (const WireError&) {
                    abort(AbortReason::Transport);
                    return {};
                }
            },
        },
        event);
}

std::vector<SessionMessage> BobSession::try_confirm_sync() {
    if (!local_offset_ || !announced_) return {};
    if (*local_offset_ != announced_->offset) {
        abort(AbortReason::Sync);
        return {};
    }
    phase_ = SessionPhase::Measure;
    return {};
}

std::vector<SessionMessage> BobSession::on_message(const SessionMessage& msg) {
    switch (phase_) {
        case SessionPhase::Sync:
            if (msg.kind != MessageKind::SyncAnnounce || announced_) break;
            announced_ = decode_sync_announce(msg.payload);
            return try_confirm_sync();
        case SessionPhase::Reveal: {
            if (msg.kind != MessageKind::RevealValues) break;
            const auto values = decode_reveal_values(msg.payload);
            if (values.size() != reveal_indices_.size()) break;
            return estimate_and_reconcile(values);
        }
        case SessionPhase::Amplify: {
            if (msg.kind != MessageKind::PaSeed) break;
            const PaSeed seed = decode_pa_seed(msg.payload);
            outcome_.key = amplify(raw_, target_bits_, seed);
            outcome_.digest = key_digest(outcome_.key);
            phase_ = SessionPhase::Done;
            return {make_message(MessageKind::KeyConfirm,
                                 encode_key_confirm({outcome_.key.size(), outcome_.digest}))};
        }
        default:
            break;
    }
    abort(AbortReason::Protocol);
    return {};
}

std::vector<SessionMessage> BobSession::estimate_and_reconcile(const std::vector<QuadraturePair>& values) {
    phase_ = SessionPhase::Estimate;
    std::vector<SamplePair> pairs(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) pairs[k] = {values[k], measured_[reveal_indices_[k]]};

    auto reject = [&]() {
        EstimateAckPayload nack;
        if (outcome_.estimate) {
            nack.t_hat = outcome_.estimate->t_hat;
            nack.xi_hat = outcome_.estimate->xi_hat;
            nack.t_lo = outcome_.estimate->t_lo;
            nack.xi_hi = outcome_.estimate->xi_hi;
        }
        std::vector<SessionMessage> out{make_message(MessageKind::EstimateAck, encode_estimate_ack(nack))};
        abort(AbortReason::NoKey);
        return out;
    };

    try {
        if (opts_.compensation)
            outcome_.compensation_angles =
                compensate_windows(reveal_indices_, pairs, measured_, opts_.compensation_window);
        CovarianceEstimate est = estimate_parameters(pairs, opts_.session, opts_.receiver, opts_.z);
        if (opts_.count_scale > 1.0) est = rescale_estimate(est, opts_.count_scale, opts_.z);
        outcome_.estimate = est;
        outcome_.report = secure_key_rate(assemble_key_rate_inputs(est, opts_.session, opts_.receiver));
    } catch (const std::exception&) {
        // Too few pairs, a nonpositive transmission or a nonphysical
        // covariance all leave nothing to distill.
        return reject();
    }
    if (outcome_.report->clamped) return reject();

    std::vector<std::uint8_t> revealed(measured_.size(), 0);
    for (std::uint32_t i : reveal_indices_) revealed[i] = 1;
    std::vector<double> key_x;
    key_x.reserve(measured_.size() - reveal_indices_.size());
    for (std::size_t i = 0; i < measured_.size(); ++i)
        if (!revealed[i]) key_x.push_back(measured_[i].x);
    const double sigma = stddev(key_x);
    if (!(sigma > 0.0)) return reject();
    raw_ = discretize(key_x, sigma);
    target_bits_ = target_key_length(key_x.size(), *outcome_.report);
    if (target_bits_ == 0) return reject();

    const CovarianceEstimate& est = *outcome_.estimate;
    EstimateAckPayload ack{1, est.t_hat, est.xi_hat, est.t_lo, est.xi_hi, target_bits_};
    std::vector<SessionMessage> out;
    out.push_back(make_message(MessageKind::EstimateAck, encode_estimate_ack(ack)));
    out.push_back(make_message(MessageKind::ReconcileBlock, encode_reconcile({raw_.size(), pack_bits(raw_)})));
    phase_ = SessionPhase::Amplify;
    return out;
}

}  // namespace dqkd
