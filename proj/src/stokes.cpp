#include "dqkd/stokes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dqkd {

double wrap_phase(double radians) {
    double w = std::fmod(radians, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    // fmod can return exactly 2*pi after the correction for tiny negative inputs
    if (w >= kTwoPi) w = 0.0;
    return w;
}

double StokesVector::polarized_intensity() const {
    return std::sqrt(s1 * s1 + s2 * s2 + s3 * s3);
}

ModulationConfig ModulationConfig::with_default_gain(double v1, double a_lo) {
    ModulationConfig cfg{v1, a_lo, 8.0 * std::sqrt(v1)};
    cfg.validate();
    return cfg;
}

void ModulationConfig::validate() const {
    if (!(v1 > 0.0) || !std::isfinite(v1))
        throw std::invalid_argument("modulation variance v1 must be positive");
    if (!(a_lo > 0.0) || !std::isfinite(a_lo))
        throw std::invalid_argument("LO amplitude a_lo must be positive");
    if (!(readout_gain > 0.0) || !std::isfinite(readout_gain))
        throw std::invalid_argument("readout_gain must be positive");
}

StokesVector jones_to_stokes(const JonesVector& j) {
    const double ih = std::norm(j.h);
    const double iv = std::norm(j.v);
    const Complex cross = std::conj(j.h) * j.v;
    return {ih + iv, ih - iv, 2.0 * cross.real(), -2.0 * cross.imag()};
}

JonesMatrix phase_on_h(double phi) {
    return {std::polar(1.0, phi), 0.0, 0.0, 1.0};
}

// Loop + PBS pass: (Eh, Ev) -> (Ev, -Eh).
JonesMatrix sagnac_exchange() {
    return {0.0, 1.0, -1.0, 0.0};
}

JonesMatrix rotator_45() {
    const double r = 1.0 / std::sqrt(2.0);
    return {r, r, -r, r};
}

EncodingTrace trace_encoding(DrivePhases phases, const ModulationConfig& cfg) {
    EncodingTrace t;
    const double amp = cfg.a_lo / std::sqrt(2.0);
    t.input = {amp, amp};
    t.after_pm1 = phase_on_h(phases.phi1) * t.input;
    t.after_loop = sagnac_exchange() * t.after_pm1;
    t.after_rotator = rotator_45() * t.after_loop;
    t.after_pm2 = phase_on_h(phases.phi2) * t.after_rotator;
    t.output = sagnac_exchange() * t.after_pm2;
    return t;
}

JonesVector encode_chain(DrivePhases phases, const ModulationConfig& cfg) {
    return trace_encoding(phases, cfg).output;
}

StokesVector ideal_stokes_readout(DrivePhases phases, const ModulationConfig& cfg) {
    StokesVector s = jones_to_stokes(encode_chain(phases, cfg));
    const double radius = cfg.readout_gain * std::sin(phases.phi1);
    s.s2 = radius * std::sin(phases.phi2);
    s.s3 = radius * std::cos(phases.phi2);
    return s;
}

QuadraturePair sample_gaussian_point(UniformDraw u, const ModulationConfig& cfg) {
    if (!(u.u1 >= 0.0 && u.u1 <= 1.0))
        throw std::invalid_argument("u1 must lie in [0, 1]");
    if (u.u2 == 0.0)
        throw std::domain_error("u2 = 0 gives an infinite radius");
    if (!(u.u2 > 0.0 && u.u2 <= 1.0))
        throw std::invalid_argument("u2 must lie in (0, 1]");
    const double radius = std::sqrt(-2.0 * cfg.v1 * std::log(u.u2));
    const double angle = kTwoPi * u.u1;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

DrivePhases phases_for_target(QuadraturePair q, const ModulationConfig& cfg,
                              SaturationCounter* saturation) {
    const double r = std::hypot(q.x, q.p);
    const bool clipped = r > cfg.readout_gain;
    if (saturation) {
        ++saturation->total;
        if (clipped) ++saturation->clipped;
    }
    if (r == 0.0) return {0.0, 0.0};
    const double phi1 = std::asin(std::min(r, cfg.readout_gain) / cfg.readout_gain);
    return {phi1, wrap_phase(std::atan2(q.x, q.p))};
}

}  // namespace dqkd
