#include "dqkd/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dqkd {

void ChannelParams::validate() const {
    if (!(loss_db >= 0.0) || !std::isfinite(loss_db))
        throw std::invalid_argument("loss_db must be >= 0");
    if (!(excess_noise >= 0.0) || !std::isfinite(excess_noise))
        throw std::invalid_argument("excess_noise must be >= 0");
    if (!(drift_rate >= 0.0) || !std::isfinite(drift_rate))
        throw std::invalid_argument("drift_rate must be >= 0");
    if (!std::isfinite(doppler_residual_hz))
        throw std::invalid_argument("doppler_residual_hz must be finite");
    if (!(pulse_rate_hz > 0.0) || !std::isfinite(pulse_rate_hz))
        throw std::invalid_argument("pulse_rate_hz must be > 0");
    if (!(timing_jitter_s >= 0.0) || !std::isfinite(timing_jitter_s))
        throw std::invalid_argument("timing_jitter_s must be >= 0");
}

double ChannelParams::transmittance() const { return db_to_transmittance(loss_db); }

void ReceiverConfig::validate() const {
    if (!(split_ratio > 0.0 && split_ratio < 1.0))
        throw std::invalid_argument("split_ratio must lie in (0, 1)");
    if (!(efficiency > 0.0 && efficiency <= 1.0))
        throw std::invalid_argument("efficiency must lie in (0, 1]");
    if (!(electronic_noise >= 0.0) || !std::isfinite(electronic_noise))
        throw std::invalid_argument("electronic_noise must be >= 0");
    if (!(extinction_db >= 0.0) || !std::isfinite(extinction_db))
        throw std::invalid_argument("extinction_db must be >= 0");
    if (!(lo_monitor_level >= 0.0) || !std::isfinite(lo_monitor_level))
        throw std::invalid_argument("lo_monitor_level must be >= 0");
}

double db_to_transmittance(double loss_db) {
    if (!(loss_db >= 0.0) || !std::isfinite(loss_db))
        throw std::invalid_argument("loss_db must be finite and >= 0");
    return std::pow(10.0, -loss_db / 10.0);
}

double transmittance_to_db(double transmittance) {
    if (!(transmittance > 0.0 && transmittance <= 1.0))
        throw std::invalid_argument("transmittance must lie in (0, 1]");
    return -10.0 * std::log10(transmittance);
}

QuadraturePair rotate(QuadraturePair q, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {q.x * c - q.p * s, q.x * s + q.p * c};
}

ChannelState step_channel(ChannelState state, const ChannelParams& params, Rng& rng) {
    return step_channel(state, params, rng, 1.0 / params.pulse_rate_hz);
}

ChannelState step_channel(ChannelState state, const ChannelParams& params, Rng& rng, double dt) {
    // The draw is taken even at zero rate so that stream alignment does not
    // depend on the parameters.
    state.drift_phase = wrap_phase(state.drift_phase + rng.normal(params.drift_rate * std::sqrt(dt)));
    state.doppler_phase = wrap_phase(state.doppler_phase + kTwoPi * params.doppler_residual_hz * dt);
    ++state.pulse_index;
    return state;
}

QuadraturePair propagate(QuadraturePair target, const ChannelState& state,
                         const ChannelParams& params, Rng& rng, double fade) {
    const double t = params.transmittance() * fade;
    const QuadraturePair r = rotate(target, state.rotation());
    const double noise_sigma = std::sqrt(t * params.excess_noise);
    const double scale = std::sqrt(t);
    const double nx = rng.normal(noise_sigma);
    const double np = rng.normal(noise_sigma);
    return {scale * r.x + nx, scale * r.p + np};
}

HeterodyneSample heterodyne_measure(QuadraturePair q, const ReceiverConfig& rcv, Rng& rng,
                                    std::uint64_t pulse_index) {
    const double gain = std::sqrt(rcv.efficiency);
    const double sigma = std::sqrt(1.0 + rcv.electronic_noise);
    HeterodyneSample out;
    out.s2 = gain * q.x + rng.normal(sigma);
    out.s3 = gain * q.p + rng.normal(sigma);
    out.s1 = rcv.split_ratio * rcv.lo_monitor_level + rng.normal(1.0);
    out.pulse_index = pulse_index;
    return out;
}

double pointing_fade(double residual_urad, double beam_divergence_urad) {
    if (!(residual_urad >= 0.0))
        throw std::invalid_argument("residual must be >= 0");
    if (!(beam_divergence_urad > 0.0))
        throw std::invalid_argument("beam divergence must be > 0");
    const double ratio = residual_urad / beam_divergence_urad;
    // Floored so a grossly mispointed beam stays a positive, if negligible, fade.
    return std::max(std::exp(-2.0 * ratio * ratio), std::numeric_limits<double>::min());
}

}  // namespace dqkd
