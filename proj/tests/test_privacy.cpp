#include <doctest.h>

#include <vector>

#include "dqkd/privacy.hpp"
#include "oracles.hpp"

using namespace dqkd;

namespace {

BitString random_bits(std::size_t n, Rng& rng) {
    BitString b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng.next_u64() & 1U);
    return b;
}

PaSeed fixed_seed() {
    PaSeed s{};
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::uint8_t>(0x5a ^ (i * 37));
    return s;
}

}  // namespace

TEST_SUITE("privacy") {

TEST_CASE("Toeplitz hash of a fixed 64-bit input matches the matrix product") {
    Rng rng(1);
    const BitString in = random_bits(64, rng);
    const std::size_t out_len = 32;
    const BitString diag = expand_seed(fixed_seed(), out_len + in.size() - 1);
    CHECK(toeplitz_hash(in, diag, out_len) == oracle::toeplitz_bruteforce(in, diag, out_len));
}

TEST_CASE("Toeplitz hash agrees with the oracle across sizes") {
    Rng rng(2);
    for (std::size_t m : {1u, 2u, 7u, 64u, 333u, 1000u, 4097u})
        for (std::size_t out : {1u, 5u, 64u, 257u}) {
            const BitString in = random_bits(m, rng);
            const BitString diag = random_bits(out + m - 1, rng);
            CHECK(toeplitz_hash(in, diag, out) == oracle::toeplitz_bruteforce(in, diag, out));
        }
}

TEST_CASE("Toeplitz hash stays exact on a long all-ones input") {
    // Worst case for rounding: every convolution term is 1.
    const std::size_t m = 200000, out = 2000;
    const BitString in(m, 1), diag(out + m - 1, 1);
    const BitString h = toeplitz_hash(in, diag, out);
    for (std::uint8_t b : h) CHECK(b == static_cast<std::uint8_t>(m & 1U));
}

TEST_CASE("Toeplitz argument checks") {
    const BitString in(10, 1);
    CHECK_THROWS_AS(toeplitz_hash(in, BitString(5, 1), 4), std::invalid_argument);
    CHECK(toeplitz_hash(in, BitString(13, 1), 0).empty());
}

TEST_CASE("identical inputs give equal 128-bit keys") {
    Rng src(3), rng(4);
    const BitString raw = random_bits(5000, src);
    const AmplifiedKeys k = reconcile_and_amplify(raw, raw, 128, rng);
    CHECK(k.alice.size() == 128);
    CHECK(k.alice == k.bob);
    CHECK(k.corrected_bits == 0);
}

TEST_CASE("reconciliation corrects Alice's differing bits") {
    Rng src(5), rng(6);
    BitString bob = random_bits(4000, src);
    BitString alice = bob;
    for (std::size_t i = 0; i < alice.size(); i += 9) alice[i] ^= 1U;
    const AmplifiedKeys k = reconcile_and_amplify(alice, bob, 1000, rng);
    CHECK(k.corrected_bits == (alice.size() + 8) / 9);
    CHECK(k.alice == k.bob);
    CHECK_THROWS_AS(reconcile_and_amplify(alice, BitString(3), 10, rng), std::invalid_argument);
}

TEST_CASE("same seed and inputs give identical keys") {
    Rng src(7);
    const BitString raw = random_bits(3000, src);
    CHECK(amplify(raw, 700, fixed_seed()) == amplify(raw, 700, fixed_seed()));
    PaSeed other = fixed_seed();
    other[0] ^= 1U;
    CHECK(amplify(raw, 700, fixed_seed()) != amplify(raw, 700, other));
    CHECK(amplify(raw, 0, fixed_seed()).empty());
    CHECK(amplify(raw, 10000, fixed_seed()).size() == raw.size());
}

TEST_CASE("amplified keys are balanced") {
    Rng src(8);
    const BitString key = amplify(random_bits(60000, src), 20000, fixed_seed());
    double ones = 0;
    for (auto b : key) ones += b;
    const double n = static_cast<double>(key.size());
    const double chi2 = (ones - n / 2) * (ones - n / 2) / (n / 2) +
                        ((n - ones) - n / 2) * ((n - ones) - n / 2) / (n / 2);
    CHECK(chi2 < 6.635);
}

TEST_CASE("target length follows the bracket") {
    KeyRateReport r;
    r.bracket = 0.1234;
    CHECK(target_key_length(1000, r) == 123);
    r.bracket = -0.1;
    CHECK(target_key_length(1000, r) == 0);
}

TEST_CASE("discretization bins and bit order") {
    const std::vector<double> v{-100.0, -7.99, 0.0, 0.01, 7.99, 100.0};
    const BitString b = discretize(v, 1.0, 3, 8.0);
    REQUIRE(b.size() == 18);
    const int expected_bins[] = {0, 0, 4, 4, 7, 7};
    for (std::size_t i = 0; i < v.size(); ++i) {
        const int bin = (b[3 * i] << 2) | (b[3 * i + 1] << 1) | b[3 * i + 2];
        CHECK(bin == expected_bins[i]);
    }
    CHECK_THROWS_AS(discretize(v, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(discretize(v, 1.0, 0), std::invalid_argument);
}

TEST_CASE("pack/unpack round trip and digest") {
    Rng src(9);
    for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 1000u}) {
        const BitString bits = random_bits(n, src);
        const auto packed = pack_bits(bits);
        CHECK(packed.size() == (n + 7) / 8);
        CHECK(unpack_bits(packed, n) == bits);
    }
    CHECK(pack_bits(BitString{1, 0, 0, 0, 0, 0, 0, 1, 1})[0] == 0x81);
    CHECK(pack_bits(BitString{1, 0, 0, 0, 0, 0, 0, 1, 1})[1] == 0x80);
    CHECK_THROWS_AS(unpack_bits(std::vector<std::uint8_t>{0}, 9), std::invalid_argument);

    const BitString a{1, 0, 1}, b{1, 0, 1, 0};
    CHECK(key_digest(a) != key_digest(b));
    CHECK(key_digest(a) == key_digest(BitString{1, 0, 1}));
}

TEST_CASE("seed expansion is deterministic") {
    const BitString a = expand_seed(fixed_seed(), 1000);
    CHECK(a == expand_seed(fixed_seed(), 1000));
    const BitString longer = expand_seed(fixed_seed(), 1500);
    CHECK(std::equal(a.begin(), a.end(), longer.begin()));
    Rng r1(10), r2(10);
    CHECK(draw_pa_seed(r1) == draw_pa_seed(r2));
}

}
