#pragma once

/**
 * @file stokes.hpp
 * @brief Jones/Stokes algebra and the three-stage Sagnac polarization encoder.
 *
 * The transmitter turns two drive phases into a polarization state:
 *   input (45 deg linear) -> PM1 on H -> Sagnac exchange -> 45 deg rotator
 *   -> PM2 on H -> PBS recombination.
 * The encoded quadratures are carried by the (s2, s3) Stokes components.
 *
 * Stokes convention used throughout:
 *   s0 = |Eh|^2 + |Ev|^2,  s1 = |Eh|^2 - |Ev|^2,
 *   s2 = 2 Re(Eh* Ev),     s3 = 2 Im(Eh Ev*).
 */

#include <complex>
#include <cstdint>
#include <numbers>

namespace dqkd {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into [0, 2*pi).
double wrap_phase(double radians);

struct JonesVector {
    Complex h;
    Complex v;

    double intensity() const { return std::norm(h) + std::norm(v); }
};

struct StokesVector {
    double s0 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;

    /// |(s1, s2, s3)|; equals s0 for a fully polarized state.
    double polarized_intensity() const;
};

/// 2x2 complex matrix acting on a JonesVector.
struct JonesMatrix {
    Complex m00, m01, m10, m11;

    JonesVector operator*(const JonesVector& j) const {
        return {m00 * j.h + m01 * j.v, m10 * j.h + m11 * j.v};
    }
};

/// Uniform inputs of the Box-Muller draw. u1 in [0,1], u2 in (0,1].
struct UniformDraw {
    double u1 = 0.0;
    double u2 = 1.0;
};

/// Quadrature pair in shot-noise units.
struct QuadraturePair {
    double x = 0.0;
    double p = 0.0;
};

/// Modulator drive phases, both wrapped to [0, 2*pi).
struct DrivePhases {
    double phi1 = 0.0;
    double phi2 = 0.0;

    static DrivePhases wrapped(double phi1, double phi2) {
        return {wrap_phase(phi1), wrap_phase(phi2)};
    }
};

struct ModulationConfig {
    double v1 = 4.0;            ///< modulation variance V1 (SNU)
    double a_lo = 1.0;          ///< LO amplitude
    double readout_gain = 16.0; ///< maximum representable (s2, s3) radius

    /// Gain of 8 sigma: P(r > gain) for a Gaussian draw is about 1e-14.
    static ModulationConfig with_default_gain(double v1, double a_lo = 1.0);

    /// Throws std::invalid_argument unless every field is strictly positive.
    void validate() const;
};

StokesVector jones_to_stokes(const JonesVector& j);

// Elementary stages of the encoder.
JonesMatrix phase_on_h(double phi);
JonesMatrix sagnac_exchange();
JonesMatrix rotator_45();

/// Every intermediate state of the encoding chain.
struct EncodingTrace {
    JonesVector input;        ///< 45 deg linear launch state
    JonesVector after_pm1;    ///< relative phase phi1 on H
    JonesVector after_loop;   ///< leaving the second Sagnac loop
    JonesVector after_rotator;///< pre-modulated state
    JonesVector after_pm2;    ///< secondary phase phi2 on H
    JonesVector output;       ///< recombined target state
};

EncodingTrace trace_encoding(DrivePhases phases, const ModulationConfig& cfg);

/// Output of the full chain; lossless, so its intensity is a_lo^2.
JonesVector encode_chain(DrivePhases phases, const ModulationConfig& cfg);

/// Closed-form readout: (s2, s3) = gain * sin(phi1) * (sin(phi2), cos(phi2)).
/// s0 and s1 are taken from the encoded Jones state.
StokesVector ideal_stokes_readout(DrivePhases phases, const ModulationConfig& cfg);

/// Box-Muller: radius sqrt(-2 V1 ln u2), angle 2 pi u1.
/// Throws std::domain_error for u2 == 0 and std::invalid_argument outside the ranges.
QuadraturePair sample_gaussian_point(UniformDraw u, const ModulationConfig& cfg);

/// Tally of targets clipped to the readout radius.
struct SaturationCounter {
    std::uint64_t clipped = 0;
    std::uint64_t total = 0;

    double fraction() const {
        return total == 0 ? 0.0 : static_cast<double>(clipped) / static_cast<double>(total);
    }
};

/// Inverse of ideal_stokes_readout on the disk r <= readout_gain; larger radii
/// are clipped to the rim and counted. phi1 stays on the [0, pi/2] branch.
DrivePhases phases_for_target(QuadraturePair q, const ModulationConfig& cfg,
                              SaturationCounter* saturation = nullptr);

}  // namespace dqkd
