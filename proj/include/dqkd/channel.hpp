#pragma once

// Parametric free-space channel and the heterodyne Stokes receiver.

#include <cstdint>

#include "dqkd/rng.hpp"
#include "dqkd/stokes.hpp"

namespace dqkd {

struct ChannelParams {
    double loss_db = 0.0;             ///< attenuation, dB
    double excess_noise = 0.02;       ///< xi, SNU referred to channel input
    double drift_rate = 0.0;          ///< polarization random walk, rad/sqrt(s)
    double doppler_residual_hz = 0.0; ///< uncompensated frequency offset
    double pulse_rate_hz = 1e7;
    double timing_jitter_s = 200e-12;

    void validate() const;
    double transmittance() const;
};

struct ChannelState {
    double drift_phase = 0.0;
    double doppler_phase = 0.0;
    std::uint64_t pulse_index = 0;

    /// Total rotation of the (s2, s3) plane.
    double rotation() const { return drift_phase + doppler_phase; }
};

struct ReceiverConfig {
    double split_ratio = 0.10;        ///< fraction tapped for s1 monitoring
    double efficiency = 0.55;         ///< eta
    double electronic_noise = 0.10;   ///< v_el, SNU
    double extinction_db = 70.0;      ///< filter isolation; no background term is modeled
    double lo_monitor_level = 100.0;  ///< LO power seen by the s1 tap before splitting, SNU

    void validate() const;
};

struct HeterodyneSample {
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;
    std::uint64_t pulse_index = 0;
};

/// T = 10^(-dB/10). Throws std::invalid_argument for negative or non-finite loss.
double db_to_transmittance(double loss_db);
double transmittance_to_db(double transmittance);

/// Rotation of the (x, p) plane by `angle` (counter-clockwise).
QuadraturePair rotate(QuadraturePair q, double angle);

/// Advances drift and Doppler phases by one pulse period (1 / pulse_rate_hz).
ChannelState step_channel(ChannelState state, const ChannelParams& params, Rng& rng);

/// Same as above with an explicit time step; used when one simulated pulse
/// stands for several real pulses.
ChannelState step_channel(ChannelState state, const ChannelParams& params, Rng& rng, double dt);

/// Rotate by the accumulated phase, scale by sqrt(T * fade), add Gaussian noise
/// of variance T * fade * xi. Output is the field an ideal receiver would see.
QuadraturePair propagate(QuadraturePair target, const ChannelState& state,
                         const ChannelParams& params, Rng& rng, double fade = 1.0);

/// Heterodyne readout of (s2, s3): sqrt(eta) * q plus N(0, 1 + v_el) per
/// quadrature. s1 is the LO monitor reading from the tapped arm.
HeterodyneSample heterodyne_measure(QuadraturePair q, const ReceiverConfig& rcv, Rng& rng,
                                    std::uint64_t pulse_index = 0);

/// Gaussian-beam far-field overlap exp(-2 (residual / divergence)^2), floored
/// at the smallest normal double so it never reaches zero.
double pointing_fade(double residual_urad, double beam_divergence_urad);

}  // namespace dqkd
