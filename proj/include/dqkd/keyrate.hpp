#pragma once

/**
 * @file keyrate.hpp
 * @brief Finite-size secure key rate for Gaussian-modulated coherent states
 * with heterodyne detection and reverse reconciliation.
 *
 *   K = f * (n / N) * [ beta * I(A:B) - chi(B:E) - delta(n) ]   (clamped at 0)
 *
 * All noise quantities are in shot-noise units with vacuum variance 1;
 * V = V1 + 1 is Alice's total variance. The receiver (efficiency eta,
 * electronic noise v_el) is treated as trusted: its noise enters I(A:B)
 * but is not attributed to the eavesdropper.
 */

#include <cstdint>
#include <stdexcept>

#include "dqkd/channel.hpp"

namespace dqkd {

/// Gaussian-tail coefficient used for the worst-case bounds at eps_pe = 1e-10.
inline constexpr double kConfidenceZ = 6.5;

struct SessionConfig {
    std::uint64_t block_size = 1'000'000;  ///< N, pulses per block
    double reveal_fraction = 0.5;          ///< m / N
    double beta = 0.95;                    ///< reconciliation efficiency
    double eps_pe = 1e-10;
    double eps_bar = 1e-10;
    double eps_pa = 1e-10;
    double v1 = 4.0;                       ///< modulation variance, SNU
    double pulse_rate_hz = 1e7;

    void validate() const;

    std::uint64_t revealed() const;    ///< m
    std::uint64_t key_pulses() const;  ///< n = N - m
};

struct CovarianceEstimate {
    double t_hat = 0.0;     ///< sqrt(eta T)
    double xi_hat = 0.0;    ///< excess noise, SNU
    std::uint64_t n_used = 0;
    double t_lo = 0.0;      ///< t_hat - z sigma_t
    double xi_hi = 0.0;     ///< xi_hat + z sigma_xi
    double sigma_t = 0.0;
    double sigma_xi = 0.0;
};

/// Physical parameters entering the entropic quantities.
struct LinkParameters {
    double transmittance = 1.0;   ///< channel T (detector excluded)
    double excess_noise = 0.0;    ///< xi
    double v1 = 4.0;
    double efficiency = 1.0;      ///< eta
    double electronic_noise = 0.0;///< v_el

    void validate() const;
};

/// Link seen through the worst-case estimate: T = t_lo^2 / eta, xi = xi_hi.
LinkParameters worst_case_link(const CovarianceEstimate& est, const SessionConfig& cfg,
                               const ReceiverConfig& rcv);
/// Link seen through the point estimate (t_hat, xi_hat).
LinkParameters nominal_link(const CovarianceEstimate& est, const SessionConfig& cfg,
                            const ReceiverConfig& rcv);

/// Raised when a covariance matrix violates the uncertainty principle.
class PhysicsError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// G(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2); G(1) = 0.
double entropy_function(double nu);

/// Symplectic eigenvalues: nu1, nu2 of the two-mode state shared by Alice and
/// the channel output; nu3, nu4 of Eve's purification conditioned on Bob's
/// heterodyne outcome (the fifth eigenvalue is 1).
struct SymplecticSpectrum {
    double nu1, nu2, nu3, nu4;
};

SymplecticSpectrum symplectic_spectrum(const LinkParameters& link);

/// Total noise referred to the channel input, chi_line + chi_het / T.
double total_added_noise(const LinkParameters& link);

/// I(A:B) = log2((V + chi_tot) / (1 + chi_tot)), bits per pulse.
double mutual_information(const LinkParameters& link);

/// chi(B:E) = G(nu1) + G(nu2) - G(nu3) - G(nu4), bits per pulse.
double holevo_bound(const LinkParameters& link);

/// 7 sqrt(log2(2 / eps_bar) / n) + (2 / n) log2(1 / eps_pa).
double finite_size_delta(double n, const SessionConfig& cfg);

struct KeyRateInputs {
    CovarianceEstimate est;
    SessionConfig cfg;
    double i_ab = 0.0;
    double chi_be = 0.0;
    double delta_n = 0.0;
};

struct KeyRateReport {
    double key_rate_bps = 0.0;
    double bracket = 0.0;        ///< beta I - chi - delta, unclamped
    double i_ab = 0.0;
    double chi_be = 0.0;
    double delta_n = 0.0;
    double beta = 0.0;
    double key_fraction = 0.0;   ///< n / N
    double pulse_rate_hz = 0.0;
    bool clamped = false;
};

KeyRateReport secure_key_rate(const KeyRateInputs& inputs);

/// Fills every term from the worst-case view of an estimate; the
/// finite-size term uses n = cfg.key_pulses().
KeyRateInputs assemble_key_rate_inputs(const CovarianceEstimate& est, const SessionConfig& cfg,
                                       const ReceiverConfig& rcv);

/// Asymptotic rate for a known link, without estimation or finite-size terms.
double asymptotic_bits_per_pulse(const LinkParameters& link, double beta);

}  // namespace dqkd
