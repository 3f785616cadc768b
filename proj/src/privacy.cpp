#include "dqkd/privacy.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

namespace dqkd {

namespace {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (!p) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// Smallest 2^a 3^b 5^c >= n; FFTW handles these radices efficiently.
std::size_t next_fft_size(std::size_t n) {
    std::size_t best = 1;
    while (best < n) best <<= 1;
    for (std::size_t p5 = 1; p5 < best; p5 *= 5)
        for (std::size_t p35 = p5; p35 < best; p35 *= 3) {
            std::size_t v = p35;
            while (v < n) v <<= 1;
            best = std::min(best, v);
        }
    return best;
}

}  // namespace

BitString discretize(std::span<const double> values, double sigma, int bits, double range_sigmas) {
    if (!(sigma > 0.0)) throw std::invalid_argument("discretize: sigma must be > 0");
    if (bits < 1 || bits > 16) throw std::invalid_argument("discretize: bits must lie in [1, 16]");
    const double range = range_sigmas * sigma;
    const long levels = 1L << bits;
    BitString out;
    out.reserve(values.size() * static_cast<std::size_t>(bits));
    for (double v : values) {
        long bin = static_cast<long>(std::floor((v + range) / (2.0 * range) * static_cast<double>(levels)));
        bin = std::clamp(bin, 0L, levels - 1);
        for (int b = bits - 1; b >= 0; --b) out.push_back(static_cast<std::uint8_t>((bin >> b) & 1));
    }
    return out;
}

BitString expand_seed(const PaSeed& seed, std::size_t n_bits) {
    std::array<std::uint32_t, 8> words{};
    for (std::size_t i = 0; i < words.size(); ++i)
        words[i] = (std::uint32_t{seed[4 * i]} << 24) | (std::uint32_t{seed[4 * i + 1]} << 16) |
                   (std::uint32_t{seed[4 * i + 2]} << 8) | std::uint32_t{seed[4 * i + 3]};
    std::seed_seq seq(words.begin(), words.end());
    std::mt19937_64 engine(seq);
    BitString out(n_bits);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n_bits; ++i) {
        if (i % 64 == 0) word = engine();
        out[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
    }
    return out;
}

PaSeed draw_pa_seed(Rng& rng) {
    PaSeed seed{};
    for (std::size_t i = 0; i < seed.size(); i += 8) {
        const std::uint64_t w = rng.next_u64();
        for (std::size_t b = 0; b < 8; ++b) seed[i + b] = static_cast<std::uint8_t>(w >> (56 - 8 * b));
    }
    return seed;
}

BitString toeplitz_hash(std::span<const std::uint8_t> input, std::span<const std::uint8_t> diag,
                        std::size_t out_len) {
    const std::size_t m = input.size();
    if (out_len == 0) return {};
    if (m == 0) return BitString(out_len, 0);
    if (diag.size() != out_len + m - 1)
        throw std::invalid_argument("toeplitz_hash: diagonal must hold out_len + input_len - 1 bits");

    // Circular convolution of length P >= out_len + m - 1 leaves the needed
    // window [m - 1, m - 1 + out_len) free of wrap-around.
    const std::size_t n = next_fft_size(out_len + m - 1);
    const std::size_t nc = n / 2 + 1;
    auto a = fftw_buffer<double>(n);
    auto b = fftw_buffer<double>(n);
    auto fa = fftw_buffer<fftw_complex>(nc);
    auto fb = fftw_buffer<fftw_complex>(nc);

    const int ni = static_cast<int>(n);
    Plan pa(fftw_plan_dft_r2c_1d(ni, a.get(), fa.get(), FFTW_ESTIMATE));
    Plan pb(fftw_plan_dft_r2c_1d(ni, b.get(), fb.get(), FFTW_ESTIMATE));
    Plan inv(fftw_plan_dft_c2r_1d(ni, fa.get(), a.get(), FFTW_ESTIMATE));

    std::fill(a.get(), a.get() + n, 0.0);
    std::fill(b.get(), b.get() + n, 0.0);
    for (std::size_t i = 0; i < diag.size(); ++i) a[i] = diag[i];
    for (std::size_t i = 0; i < m; ++i) b[i] = input[i];

    fftw_execute(pa.get());
    fftw_execute(pb.get());
    for (std::size_t k = 0; k < nc; ++k) {
        const double re = fa[k][0] * fb[k][0] - fa[k][1] * fb[k][1];
        const double im = fa[k][0] * fb[k][1] + fa[k][1] * fb[k][0];
        fa[k][0] = re;
        fa[k][1] = im;
    }
    fftw_execute(inv.get());

    BitString out(out_len);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < out_len; ++i) {
        const auto count = std::llround(a[i + m - 1] * scale);
        out[i] = static_cast<std::uint8_t>(count & 1);
    }
    return out;
}

std::size_t target_key_length(std::uint64_t key_pulses, const KeyRateReport& report) {
    if (!(report.bracket > 0.0)) return 0;
    return static_cast<std::size_t>(std::floor(static_cast<double>(key_pulses) * report.bracket));
}

BitString amplify(const BitString& reconciled, std::size_t target_bits, const PaSeed& seed) {
    if (target_bits == 0) return {};
    target_bits = std::min(target_bits, reconciled.size());
    const BitString diag = expand_seed(seed, target_bits + reconciled.size() - 1);
    return toeplitz_hash(reconciled, diag, target_bits);
}

AmplifiedKeys reconcile_and_amplify(const BitString& alice_raw, const BitString& bob_raw,
                                    std::size_t target_bits, Rng& rng) {
    if (alice_raw.size() != bob_raw.size())
        throw std::invalid_argument("raw keys differ in length");
    AmplifiedKeys keys;
    for (std::size_t i = 0; i < bob_raw.size(); ++i)
        if (alice_raw[i] != bob_raw[i]) ++keys.corrected_bits;
    keys.seed = draw_pa_seed(rng);
    const BitString& reconciled = bob_raw;
    keys.bob = amplify(reconciled, target_bits, keys.seed);
    keys.alice = amplify(reconciled, target_bits, keys.seed);
    return keys;
}

std::vector<std::uint8_t> pack_bits(const BitString& bits) {
    std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80U >> (i % 8));
    return out;
}

BitString unpack_bits(std::span<const std::uint8_t> bytes, std::size_t n_bits) {
    if (bytes.size() * 8 < n_bits) throw std::invalid_argument("unpack_bits: not enough bytes");
    BitString out(n_bits);
    for (std::size_t i = 0; i < n_bits; ++i)
        out[i] = static_cast<std::uint8_t>((bytes[i / 8] >> (7 - i % 8)) & 1U);
    return out;
}

std::uint64_t key_digest(const BitString& bits) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint8_t byte) {
        h ^= byte;
        h *= 0x100000001b3ULL;
    };
    const std::uint64_t len = bits.size();
    for (int i = 0; i < 8; ++i) feed(static_cast<std::uint8_t>(len >> (8 * i)));
    for (std::uint8_t byte : pack_bits(bits)) feed(byte);
    return h;
}

}  // namespace dqkd
