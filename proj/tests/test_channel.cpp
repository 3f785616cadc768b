#include <doctest.h>

#include <cmath>
#include <vector>

#include "dqkd/channel.hpp"
#include "oracles.hpp"

using namespace dqkd;

namespace {

struct Moments {
    double mean_x = 0.0, mean_p = 0.0, var_x = 0.0, var_p = 0.0, cov = 0.0;
};

Moments moments(const std::vector<QuadraturePair>& qs) {
    Moments m;
    const double n = static_cast<double>(qs.size());
    for (const auto& q : qs) {
        m.mean_x += q.x / n;
        m.mean_p += q.p / n;
    }
    for (const auto& q : qs) {
        m.var_x += (q.x - m.mean_x) * (q.x - m.mean_x) / (n - 1.0);
        m.var_p += (q.p - m.mean_p) * (q.p - m.mean_p) / (n - 1.0);
        m.cov += (q.x - m.mean_x) * (q.p - m.mean_p) / (n - 1.0);
    }
    return m;
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("dB conversion anchors") {
    CHECK(db_to_transmittance(0.0) == 1.0);
    // exp(-x ln(10) / 10), independent of the library's pow path.
    const auto via_exp = [](double db) { return std::exp(-db * 0.23025850929940457); };
    for (double db : {0.741, 0.955, 1.369, 3.468, 20.0})
        CHECK(db_to_transmittance(db) == doctest::Approx(via_exp(db)).epsilon(1e-14));
    // Exact values; the rounded anchors 0.45003 and 0.84316 are off by 4.3e-5 and 1.9e-5.
    CHECK(std::abs(db_to_transmittance(3.468) - 0.449987) < 1e-6);
    CHECK(std::abs(db_to_transmittance(0.741) - 0.843141) < 1e-6);
    CHECK(transmittance_to_db(db_to_transmittance(1.234)) == doctest::Approx(1.234).epsilon(1e-12));
    // The 1.2 km link's stated transmissivity corresponds to a different loss.
    CHECK(std::abs(transmittance_to_db(0.483) - 3.160) < 1e-3);
    CHECK_THROWS_AS(db_to_transmittance(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(db_to_transmittance(NAN), std::invalid_argument);
}

TEST_CASE("step_channel without drift or Doppler only counts pulses") {
    ChannelParams p;
    p.drift_rate = 0.0;
    p.doppler_residual_hz = 0.0;
    Rng rng(1);
    ChannelState s;
    s.drift_phase = 0.3;
    s.doppler_phase = 1.1;
    const ChannelState next = step_channel(s, p, rng);
    CHECK(next.drift_phase == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(next.doppler_phase == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(next.pulse_index == 1);
}

TEST_CASE("Doppler ramp advances 2 pi f_d / f per pulse") {
    ChannelParams p;
    p.doppler_residual_hz = 1e6;
    p.pulse_rate_hz = 1e7;
    Rng rng(1);
    const ChannelState s = step_channel(ChannelState{}, p, rng);
    CHECK(s.doppler_phase == doctest::Approx(0.6283185307).epsilon(1e-9));
}

TEST_CASE("drift is a random walk with variance rate^2 t") {
    ChannelParams p;
    p.drift_rate = 0.1;
    p.pulse_rate_hz = 1e7;
    // Unwrapped accumulation over many independent walks.
    Rng rng(17);
    std::vector<double> finals;
    for (int walk = 0; walk < 400; ++walk) {
        double unwrapped = 0.0;
        ChannelState s;
        for (int i = 0; i < 1'000'000 / 400 * 4; ++i) {
            const ChannelState n = step_channel(s, p, rng);
            double d = n.drift_phase - s.drift_phase;
            if (d > kPi) d -= kTwoPi;
            if (d < -kPi) d += kTwoPi;
            unwrapped += d;
            s = n;
        }
        finals.push_back(unwrapped);
    }
    // Each walk spans 1e4 pulses = 1 ms, variance 0.01 * 1e-3.
    CHECK(oracle::sample_variance(finals) == doctest::Approx(1e-5).epsilon(0.2));

    // 1e6 steps: independent increments, so Var(total) = n Var(increment).
    Rng r(1000);
    ChannelState s;
    std::vector<double> inc;
    for (int i = 0; i < 1'000'000; ++i) {
        const ChannelState n = step_channel(s, p, r);
        double d = n.drift_phase - s.drift_phase;
        if (d > kPi) d -= kTwoPi;
        if (d < -kPi) d += kTwoPi;
        inc.push_back(d);
        s = n;
    }
    CHECK(1e6 * oracle::sample_variance(inc) == doctest::Approx(1e-3).epsilon(0.1));
}

TEST_CASE("phases stay wrapped") {
    ChannelParams p;
    p.drift_rate = 50.0;
    p.doppler_residual_hz = 3e6;
    Rng rng(2);
    ChannelState s;
    for (int i = 0; i < 10000; ++i) {
        s = step_channel(s, p, rng);
        CHECK(s.drift_phase >= 0.0);
        CHECK(s.drift_phase < kTwoPi);
        CHECK(s.doppler_phase >= 0.0);
        CHECK(s.doppler_phase < kTwoPi);
    }
}

TEST_CASE("propagate examples") {
    ChannelParams p;
    p.excess_noise = 0.0;
    Rng rng(1);
    const QuadraturePair id = propagate({1.5, -0.5}, ChannelState{}, p, rng);
    CHECK(id.x == doctest::Approx(1.5));
    CHECK(id.p == doctest::Approx(-0.5));

    p.loss_db = 3.468;
    const QuadraturePair s = propagate({1.0, 0.0}, ChannelState{}, p, rng);
    CHECK(s.x == doctest::Approx(std::sqrt(0.44998703387)).epsilon(1e-10));
    CHECK(std::abs(s.x - 0.670811) < 1e-6);
    CHECK(std::abs(s.p) < 1e-12);

    ChannelState rot;
    rot.drift_phase = kPi / 2.0;
    const QuadraturePair r = propagate({1.0, 0.0}, rot, p, rng);
    CHECK(std::abs(r.x) < 1e-12);
    CHECK(r.p == doctest::Approx(0.670811).epsilon(1e-5));
}

TEST_CASE("excess noise is T xi at the output") {
    ChannelParams p;
    p.loss_db = transmittance_to_db(0.5);
    p.excess_noise = 0.05;
    Rng rng(4);
    std::vector<double> xs;
    for (int i = 0; i < 100000; ++i) xs.push_back(propagate({0.0, 0.0}, ChannelState{}, p, rng).x);
    CHECK(oracle::sample_variance(xs) == doctest::Approx(0.025).epsilon(0.05));
}

TEST_CASE("Gaussian ensembles stay Gaussian with the predicted covariance") {
    ChannelParams p;
    p.loss_db = 2.0;
    p.excess_noise = 0.1;
    ChannelState st;
    st.drift_phase = 0.4;
    Rng src(5), ch(6);
    std::vector<QuadraturePair> out;
    std::vector<double> xs;
    for (int i = 0; i < 100000; ++i) {
        const QuadraturePair in{src.normal(2.0), src.normal(2.0)};
        out.push_back(propagate(in, st, p, ch));
        xs.push_back(out.back().x);
    }
    const Moments m = moments(out);
    const double t = p.transmittance();
    const double expect = t * 4.0 + t * 0.1;
    CHECK(m.var_x == doctest::Approx(expect).epsilon(0.02));
    CHECK(m.var_p == doctest::Approx(expect).epsilon(0.02));
    CHECK(std::abs(m.cov) < 0.02 * expect);
    CHECK(oracle::ks_normal(xs, expect).d < 0.01);
}

TEST_CASE("loss composes additively in dB") {
    ChannelParams a, b, ab;
    a.loss_db = 1.2;
    b.loss_db = 0.8;
    ab.loss_db = 2.0;
    for (auto* p : {&a, &b, &ab}) p->excess_noise = 0.0;
    Rng src1(8), src2(8), r1(9), r2(10);
    std::vector<QuadraturePair> two, one;
    for (int i = 0; i < 50000; ++i) {
        const QuadraturePair in1{src1.normal(2.0), src1.normal(2.0)};
        const QuadraturePair in2{src2.normal(2.0), src2.normal(2.0)};
        two.push_back(propagate(propagate(in1, ChannelState{}, a, r1), ChannelState{}, b, r1));
        one.push_back(propagate(in2, ChannelState{}, ab, r2));
    }
    const Moments m2 = moments(two), m1 = moments(one);
    CHECK(m2.var_x == doctest::Approx(m1.var_x).epsilon(1e-9));
    CHECK(std::abs(m2.mean_x - m1.mean_x) < 1e-9);
}

TEST_CASE("heterodyne readout") {
    ReceiverConfig ideal;
    ideal.efficiency = 1.0;
    ideal.electronic_noise = 0.0;
    Rng quiet = Rng::noiseless(1);
    const HeterodyneSample pass = heterodyne_measure({2.5, -1.0}, ideal, quiet, 42);
    CHECK(pass.s2 == 2.5);
    CHECK(pass.s3 == -1.0);
    CHECK(pass.pulse_index == 42);

    Rng rng(12);
    std::vector<double> unit;
    for (int i = 0; i < 100000; ++i) unit.push_back(heterodyne_measure({0.0, 0.0}, ideal, rng).s2);
    CHECK(oracle::sample_variance(unit) == doctest::Approx(1.0).epsilon(0.03));

    ReceiverConfig rcv;
    rcv.efficiency = 0.6;
    rcv.electronic_noise = 0.1;
    std::vector<double> s2;
    double mean = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double v = heterodyne_measure({10.0, 0.0}, rcv, rng).s2;
        s2.push_back(v);
        mean += v / 100000.0;
    }
    CHECK(oracle::sample_variance(s2) == doctest::Approx(1.1).epsilon(0.03));
    CHECK(mean == doctest::Approx(10.0 * std::sqrt(0.6)).epsilon(0.03));
}

TEST_CASE("heterodyne output never beats the shot-noise floor") {
    ReceiverConfig rcv;
    Rng src(30), rng(31);
    for (double spread : {0.0, 0.5, 3.0}) {
        std::vector<double> s2;
        for (int i = 0; i < 50000; ++i)
            s2.push_back(heterodyne_measure({src.normal(spread), src.normal(spread)}, rcv, rng).s2);
        CHECK(oracle::sample_variance(s2) >= (1.0 + rcv.electronic_noise) * 0.97);
    }
}

TEST_CASE("pointing fade") {
    CHECK(pointing_fade(0.0, 500.0) == 1.0);
    CHECK(pointing_fade(500.0, 500.0) == doctest::Approx(std::exp(-2.0)));
    CHECK(std::abs(pointing_fade(38.0, 500.0) - 0.98851) < 1e-5);
    double prev = 1.0;
    for (int i = 1; i < 100; ++i) {
        const double f = pointing_fade(10.0 * i, 300.0);
        CHECK(f < prev);
        CHECK(f > 0.0);
        prev = f;
    }
    CHECK_THROWS_AS(pointing_fade(-1.0, 500.0), std::invalid_argument);
    CHECK_THROWS_AS(pointing_fade(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("identical seeds give identical streams") {
    ChannelParams p;
    p.drift_rate = 1.0;
    p.excess_noise = 0.05;
    Rng a(77), b(77);
    ChannelState sa, sb;
    for (int i = 0; i < 1000; ++i) {
        sa = step_channel(sa, p, a);
        sb = step_channel(sb, p, b);
        const QuadraturePair qa = propagate({1.0, 2.0}, sa, p, a);
        const QuadraturePair qb = propagate({1.0, 2.0}, sb, p, b);
        CHECK(qa.x == qb.x);
        CHECK(qa.p == qb.p);
    }
}

TEST_CASE("parameter validation") {
    ChannelParams p;
    p.loss_db = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.loss_db = 1.0;
    p.pulse_rate_hz = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    ReceiverConfig r;
    r.split_ratio = 1.0;
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
}

}
