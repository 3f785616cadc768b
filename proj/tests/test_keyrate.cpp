#include <doctest.h>

#include <cmath>
#include <random>

#include "dqkd/keyrate.hpp"
#include "oracles.hpp"

using namespace dqkd;

TEST_SUITE("keyrate") {

TEST_CASE("lossless noiseless link leaks nothing and carries log2((V+1)/2)") {
    const LinkParameters link{1.0, 0.0, 4.0, 1.0, 0.0};
    CHECK(holevo_bound(link) < 1e-9);
    CHECK(mutual_information(link) == doctest::Approx(std::log2(3.0)).epsilon(1e-12));
    CHECK(std::abs(mutual_information(link) - 1.58496) < 1e-5);
}

TEST_CASE("mutual information vanishes as T goes to zero") {
    double prev = 1e9;
    for (double t : {1e-1, 1e-3, 1e-5, 1e-7}) {
        const double i = mutual_information({t, 0.02, 4.0, 0.55, 0.1});
        CHECK(i < prev);
        prev = i;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("closed forms agree with the covariance-matrix oracle at the reference point") {
    const LinkParameters link{0.5, 0.05, 4.0, 0.55, 0.1};
    const auto ref = oracle::holevo(link);
    CHECK(std::abs(mutual_information(link) - ref.i_ab) < 1e-9);
    CHECK(std::abs(holevo_bound(link) - ref.chi_be) < 1e-9);

    const SymplecticSpectrum s = symplectic_spectrum(link);
    CHECK(std::abs(s.nu1 - ref.nu_ab[1]) < 1e-9);
    CHECK(std::abs(s.nu2 - ref.nu_ab[0]) < 1e-9);
    // One conditional eigenvalue is the vacuum left by the detector pair.
    CHECK(std::abs(ref.nu_cond[0] - 1.0) < 1e-9);
}

TEST_CASE("oracle agreement over random physical parameters") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const LinkParameters link{0.05 + 0.95 * u(gen), 0.1 * u(gen), 0.5 + 20.0 * u(gen),
                                  0.2 + 0.79 * u(gen), 0.3 * u(gen)};
        const auto ref = oracle::holevo(link);
        CHECK(std::abs(mutual_information(link) - ref.i_ab) < 1e-9);
        CHECK(std::abs(holevo_bound(link) - ref.chi_be) < 1e-9);
    }
}

TEST_CASE("symplectic eigenvalues are physical and G(1) = 0") {
    CHECK(entropy_function(1.0) == 0.0);
    for (double t : {0.01, 0.3, 0.9})
        for (double xi : {0.0, 0.05, 0.2}) {
            const auto s = symplectic_spectrum({t, xi, 4.0, 0.55, 0.1});
            for (double nu : {s.nu1, s.nu2, s.nu3, s.nu4}) CHECK(nu >= 1.0 - 1e-9);
        }
}

TEST_CASE("finite-size term") {
    SessionConfig cfg;
    CHECK(std::abs(finite_size_delta(1e8, cfg) - 4.10e-3) < 5e-6);
    const double sqrt_term = [&](double n) { return 7.0 * std::sqrt(std::log2(2.0 / cfg.eps_bar) / n); }(1e6);
    const double sqrt_term4 = 7.0 * std::sqrt(std::log2(2.0 / cfg.eps_bar) / 4e6);
    CHECK(sqrt_term4 / sqrt_term == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(finite_size_delta(1e20, cfg) < 1e-8);
    CHECK_THROWS_AS(finite_size_delta(0.5, cfg), std::invalid_argument);
}

TEST_CASE("rate arithmetic and clamping") {
    KeyRateInputs in;
    in.cfg.pulse_rate_hz = 1e7;
    in.cfg.reveal_fraction = 0.5;
    in.cfg.beta = 0.95;
    in.i_ab = 1.0;
    in.chi_be = 0.6;
    in.delta_n = 0.05;
    const KeyRateReport r = secure_key_rate(in);
    CHECK(r.key_rate_bps == doctest::Approx(1.5e6).epsilon(1e-12));
    CHECK_FALSE(r.clamped);

    in.chi_be = 1.2;
    const KeyRateReport neg = secure_key_rate(in);
    CHECK(neg.key_rate_bps == 0.0);
    CHECK(neg.clamped);
    CHECK(neg.bracket < 0.0);
}

TEST_CASE("key rate is monotone in loss, excess noise, beta and n") {
    auto rate = [](double loss_db, double xi, double beta, double n) {
        const LinkParameters link{db_to_transmittance(loss_db), xi, 4.0, 0.55, 0.1};
        SessionConfig cfg;
        cfg.beta = beta;
        return std::max(0.0, beta * mutual_information(link) - holevo_bound(link) -
                                 finite_size_delta(n, cfg));
    };
    for (int i = 0; i < 20; ++i) {
        const double xi = 0.005 * i;
        double prev = 1e9;
        for (int j = 0; j < 20; ++j) {
            const double k = rate(0.25 * j, xi, 0.95, 5e7);
            CHECK(k <= prev);
            prev = k;
        }
    }
    double prev_beta = -1.0, prev_n = -1.0;
    for (int j = 0; j < 20; ++j) {
        const double kb = rate(1.0, 0.02, 0.80 + 0.01 * j, 5e7);
        const double kn = rate(1.0, 0.02, 0.95, 1e5 * std::pow(2.0, j));
        CHECK(kb >= prev_beta);
        CHECK(kn >= prev_n);
        prev_beta = kb;
        prev_n = kn;
    }
}

TEST_CASE("worst-case bounds never beat the point estimate") {
    SessionConfig cfg;
    ReceiverConfig rcv;
    for (double t_hat : {0.4, 0.5, 0.6})
        for (double xi : {0.0, 0.02, 0.05}) {
            CovarianceEstimate est;
            est.t_hat = t_hat;
            est.xi_hat = xi;
            est.t_lo = t_hat - 0.01;
            est.xi_hi = xi + 0.01;
            const LinkParameters worst = worst_case_link(est, cfg, rcv);
            const LinkParameters nom = nominal_link(est, cfg, rcv);
            CHECK(asymptotic_bits_per_pulse(worst, cfg.beta) <= asymptotic_bits_per_pulse(nom, cfg.beta));
        }
}

TEST_CASE("asymptotic consistency") {
    CovarianceEstimate est;
    est.t_hat = est.t_lo = 0.6;
    est.xi_hat = est.xi_hi = 0.02;
    ReceiverConfig rcv;
    SessionConfig cfg;
    const LinkParameters link = worst_case_link(est, cfg, rcv);
    const double asym = asymptotic_bits_per_pulse(link, cfg.beta);
    KeyRateInputs in = assemble_key_rate_inputs(est, cfg, rcv);
    in.delta_n = finite_size_delta(1e14, cfg);
    CHECK(secure_key_rate(in).bracket == doctest::Approx(asym).epsilon(1e-5));
}

TEST_CASE("invalid links are rejected") {
    CHECK_THROWS_AS(mutual_information({0.0, 0.0, 4.0, 0.5, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(holevo_bound({0.5, -0.1, 4.0, 0.5, 0.1}), std::invalid_argument);
    CovarianceEstimate est;
    est.t_lo = -0.1;
    CHECK_THROWS_AS(worst_case_link(est, SessionConfig{}, ReceiverConfig{}), PhysicsError);
}

}
