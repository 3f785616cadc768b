#include "dqkd/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dqkd {

namespace {

constexpr double kPhysicalSlack = 1e-9;

void require_physical(double nu, const char* which) {
    if (!(nu >= 1.0 - kPhysicalSlack) || !std::isfinite(nu))
        throw PhysicsError(std::string("nonphysical covariance: symplectic eigenvalue ") + which +
                           " = " + std::to_string(nu));
}

// Both roots of x^2 - a x + b = 0, returned as square roots (symplectic eigenvalues).
std::pair<double, double> eigen_pair(double a, double b) {
    const double disc = std::sqrt(std::max(0.0, a * a - 4.0 * b));
    const double hi = 0.5 * (a + disc);
    const double lo = 0.5 * (a - disc);
    return {std::sqrt(std::max(0.0, hi)), std::sqrt(std::max(0.0, lo))};
}

}  // namespace

void SessionConfig::validate() const {
    if (!(reveal_fraction > 0.0 && reveal_fraction < 1.0))
        throw std::invalid_argument("reveal_fraction must lie in (0, 1)");
    if (block_size < 10'000)
        throw std::invalid_argument("block_size must be >= 1e4");
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("beta must lie in (0, 1]");
    for (double eps : {eps_pe, eps_bar, eps_pa})
        if (!(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("security parameters must lie in (0, 1)");
    if (!(v1 > 0.0))
        throw std::invalid_argument("v1 must be > 0");
    if (!(pulse_rate_hz > 0.0))
        throw std::invalid_argument("pulse_rate_hz must be > 0");
}

std::uint64_t SessionConfig::revealed() const {
    return static_cast<std::uint64_t>(std::llround(reveal_fraction * static_cast<double>(block_size)));
}

std::uint64_t SessionConfig::key_pulses() const { return block_size - revealed(); }

void LinkParameters::validate() const {
    if (!(transmittance > 0.0 && transmittance <= 1.0))
        throw std::invalid_argument("transmittance must lie in (0, 1]");
    if (!(excess_noise >= 0.0))
        throw std::invalid_argument("excess noise must be >= 0");
    if (!(v1 > 0.0))
        throw std::invalid_argument("v1 must be > 0");
    if (!(efficiency > 0.0 && efficiency <= 1.0))
        throw std::invalid_argument("efficiency must lie in (0, 1]");
    if (!(electronic_noise >= 0.0))
        throw std::invalid_argument("electronic noise must be >= 0");
}

LinkParameters worst_case_link(const CovarianceEstimate& est, const SessionConfig& cfg,
                               const ReceiverConfig& rcv) {
    if (!(est.t_lo > 0.0))
        throw PhysicsError("worst-case transmission bound is not positive");
    const double t = std::min(1.0, est.t_lo * est.t_lo / rcv.efficiency);
    return {t, std::max(0.0, est.xi_hi), cfg.v1, rcv.efficiency, rcv.electronic_noise};
}

LinkParameters nominal_link(const CovarianceEstimate& est, const SessionConfig& cfg,
                            const ReceiverConfig& rcv) {
    if (!(est.t_hat > 0.0))
        throw PhysicsError("estimated transmission is not positive");
    const double t = std::min(1.0, est.t_hat * est.t_hat / rcv.efficiency);
    return {t, std::max(0.0, est.xi_hat), cfg.v1, rcv.efficiency, rcv.electronic_noise};
}

double entropy_function(double nu) {
    if (nu <= 1.0) return 0.0;
    const double a = 0.5 * (nu + 1.0);
    const double b = 0.5 * (nu - 1.0);
    return a * std::log2(a) - b * std::log2(b);
}

double total_added_noise(const LinkParameters& link) {
    const double chi_line = 1.0 / link.transmittance - 1.0 + link.excess_noise;
    const double chi_het =
        (1.0 + (1.0 - link.efficiency) + 2.0 * link.electronic_noise) / link.efficiency;
    return chi_line + chi_het / link.transmittance;
}

SymplecticSpectrum symplectic_spectrum(const LinkParameters& link) {
    link.validate();
    const double T = link.transmittance;
    const double V = link.v1 + 1.0;
    const double chi_line = 1.0 / T - 1.0 + link.excess_noise;
    const double chi_het =
        (1.0 + (1.0 - link.efficiency) + 2.0 * link.electronic_noise) / link.efficiency;
    const double chi_tot = chi_line + chi_het / T;

    // State of Alice and the channel output.
    const double a = V * V * (1.0 - 2.0 * T) + 2.0 * T + T * T * (V + chi_line) * (V + chi_line);
    const double b = T * T * (V * chi_line + 1.0) * (V * chi_line + 1.0);
    const auto [nu1, nu2] = eigen_pair(a, b);

    // Conditioned on the heterodyne outcome, including the trusted detector modes.
    const double sqrt_b = std::sqrt(b);
    const double denom = T * (V + chi_tot);
    const double c = (a * chi_het * chi_het + b + 1.0 +
                      2.0 * chi_het * (V * sqrt_b + T * (V + chi_line)) + 2.0 * T * (V * V - 1.0)) /
                     (denom * denom);
    const double d_root = (V + sqrt_b * chi_het) / denom;
    const auto [nu3, nu4] = eigen_pair(c, d_root * d_root);

    require_physical(nu1, "nu1");
    require_physical(nu2, "nu2");
    require_physical(nu3, "nu3");
    require_physical(nu4, "nu4");
    return {nu1, nu2, nu3, nu4};
}

double mutual_information(const LinkParameters& link) {
    link.validate();
    const double V = link.v1 + 1.0;
    const double chi_tot = total_added_noise(link);
    return std::log2((V + chi_tot) / (1.0 + chi_tot));
}

double holevo_bound(const LinkParameters& link) {
    const SymplecticSpectrum s = symplectic_spectrum(link);
    const double chi = entropy_function(s.nu1) + entropy_function(s.nu2) -
                       entropy_function(s.nu3) - entropy_function(s.nu4);
    // Rounding can leave a -1e-16 residue on a noiseless, lossless link.
    return std::max(0.0, chi);
}

double finite_size_delta(double n, const SessionConfig& cfg) {
    if (!(n >= 1.0)) throw std::invalid_argument("finite_size_delta needs n >= 1");
    return 7.0 * std::sqrt(std::log2(2.0 / cfg.eps_bar) / n) + (2.0 / n) * std::log2(1.0 / cfg.eps_pa);
}

KeyRateReport secure_key_rate(const KeyRateInputs& in) {
    KeyRateReport r;
    r.i_ab = in.i_ab;
    r.chi_be = in.chi_be;
    r.delta_n = in.delta_n;
    r.beta = in.cfg.beta;
    r.pulse_rate_hz = in.cfg.pulse_rate_hz;
    r.key_fraction = static_cast<double>(in.cfg.key_pulses()) / static_cast<double>(in.cfg.block_size);
    r.bracket = in.cfg.beta * in.i_ab - in.chi_be - in.delta_n;
    r.clamped = r.bracket < 0.0;
    r.key_rate_bps = in.cfg.pulse_rate_hz * r.key_fraction * std::max(0.0, r.bracket);
    return r;
}

KeyRateInputs assemble_key_rate_inputs(const CovarianceEstimate& est, const SessionConfig& cfg,
                                       const ReceiverConfig& rcv) {
    const LinkParameters link = worst_case_link(est, cfg, rcv);
    KeyRateInputs in;
    in.est = est;
    in.cfg = cfg;
    in.i_ab = mutual_information(link);
    in.chi_be = holevo_bound(link);
    in.delta_n = finite_size_delta(static_cast<double>(cfg.key_pulses()), cfg);
    return in;
}

double asymptotic_bits_per_pulse(const LinkParameters& link, double beta) {
    return beta * mutual_information(link) - holevo_bound(link);
}

}  // namespace dqkd
