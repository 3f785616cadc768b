#pragma once

// Key-bit extraction: discretization, oracle reconciliation and Toeplitz
// privacy amplification.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dqkd/keyrate.hpp"
#include "dqkd/rng.hpp"

namespace dqkd {

/// One bit per element, values 0 or 1.
using BitString = std::vector<std::uint8_t>;
using PaSeed = std::array<std::uint8_t, 32>;

inline constexpr int kBitsPerSample = 5;
inline constexpr double kBinningRangeSigmas = 8.0;

/// Uniform 2^bits-level binning over [-range*sigma, +range*sigma]; values
/// outside fall in the edge bins. Bits are emitted MSB first.
BitString discretize(std::span<const double> values, double sigma, int bits = kBitsPerSample,
                     double range_sigmas = kBinningRangeSigmas);

/// Deterministic expansion of a 32-byte seed into `n_bits` pseudo-random bits.
BitString expand_seed(const PaSeed& seed, std::size_t n_bits);

PaSeed draw_pa_seed(Rng& rng);

/**
 * Toeplitz hash: out[i] = XOR_j  T[i][j] & in[j], with T[i][j] = diag[i - j + M - 1],
 * M = input length, diag of length out_len + M - 1.
 * Evaluated as a real convolution via FFT and reduced mod 2.
 */
BitString toeplitz_hash(std::span<const std::uint8_t> input, std::span<const std::uint8_t> diag,
                        std::size_t out_len);

/// floor(n * bracket) bits, 0 when the bracket is not positive.
std::size_t target_key_length(std::uint64_t key_pulses, const KeyRateReport& report);

struct AmplifiedKeys {
    BitString alice;
    BitString bob;
    PaSeed seed{};
    std::size_t corrected_bits = 0;  ///< positions the oracle reconciliation fixed
};

/// Reverse reconciliation by oracle: Alice's string is replaced with Bob's,
/// and the leakage is charged through beta in the key-rate bracket. Both sides
/// then hash with the same seed down to `target_bits`.
AmplifiedKeys reconcile_and_amplify(const BitString& alice_raw, const BitString& bob_raw,
                                    std::size_t target_bits, Rng& rng);

/// Same, with an externally agreed seed.
BitString amplify(const BitString& reconciled, std::size_t target_bits, const PaSeed& seed);

/// Packs bits MSB-first into bytes.
std::vector<std::uint8_t> pack_bits(const BitString& bits);
BitString unpack_bits(std::span<const std::uint8_t> bytes, std::size_t n_bits);

/// FNV-1a over the packed key; used for key confirmation.
std::uint64_t key_digest(const BitString& bits);

}  // namespace dqkd
