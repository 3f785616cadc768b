#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "dqkd/channel.hpp"
#include "dqkd/pat.hpp"

using namespace dqkd;

namespace {

CameraModel quiet_camera() {
    CameraModel cam;
    cam.read_noise = 1e-9;
    return cam;
}

PatConfig default_run(bool fine, double duration = 3.0) {
    PatConfig cfg;
    cfg.fine_loop = fine;
    cfg.duration_s = duration;
    return cfg;
}

}  // namespace

TEST_SUITE("pat") {

TEST_CASE("small-angle projection on the ground camera") {
    const CameraModel cam = CameraModel::ground_fine();
    const auto p = project({100.0, 0.0}, cam);
    const double expected = 100e-6 * 0.260 / 5.5e-6;
    CHECK(p[0] - 1024.0 == doctest::Approx(expected).epsilon(1e-12));
    CHECK(p[0] - 1024.0 == doctest::Approx(4.73).epsilon(1e-3));
    CHECK(p[1] == 1024.0);
}

TEST_CASE("zero error puts the spot at the window center") {
    const CameraModel cam = quiet_camera();
    Rng rng(1);
    const SpotImage img = render_spot({}, initial_window(cam), cam, rng);
    CHECK(img.spot_rendered);
    CHECK(img.true_x == 1024.0);
    CHECK(img.true_y == 1024.0);
    // Brightest pixels straddle the center.
    CHECK(img.at(255, 255) == doctest::Approx(img.at(256, 256)));
    CHECK(img.at(256, 256) > img.at(250, 256));
}

TEST_CASE("a spot far outside the window leaves background only") {
    const CameraModel cam;
    ReadoutWindow w = initial_window(cam);
    w.size = 64;
    const double half_px = 32.0;
    const AngleError err{3.0 * half_px * cam.urad_per_pixel(), 0.0};
    Rng rng(2);
    const SpotImage img = render_spot(err, w, cam, rng);
    CHECK_FALSE(img.spot_rendered);
    double mean = 0.0;
    for (double v : img.pixels) {
        CHECK(v >= 0.0);
        mean += v;
    }
    mean /= static_cast<double>(img.pixels.size());
    CHECK(mean == doctest::Approx(cam.background).epsilon(0.05));
    CHECK_FALSE(centroid(img).detected);
}

TEST_CASE("noiseless symmetric spot centroids to its center") {
    const CameraModel cam = quiet_camera();
    Rng rng(3);
    for (const AngleError err : {AngleError{0.0, 0.0}, AngleError{2.0 * cam.urad_per_pixel(), 0.0},
                                 AngleError{-5.0 * cam.urad_per_pixel(), 7.0 * cam.urad_per_pixel()}}) {
        const SpotImage img = render_spot(err, initial_window(cam), cam, rng);
        const Centroid c = centroid(img, cam.background + 1e-6);
        REQUIRE(c.detected);
        CHECK(std::abs(c.x - img.true_x) < 1e-6);
        CHECK(std::abs(c.y - img.true_y) < 1e-6);
    }
}

TEST_CASE("noisy SNR-20 centroids have sub-0.1 px RMS error") {
    CameraModel cam;
    cam.spot_peak = 20.0 * cam.read_noise;
    REQUIRE(cam.snr() == doctest::Approx(20.0));
    ReadoutWindow w = initial_window(cam);
    w.size = 64;
    Rng rng(4);
    double sq = 0.0;
    int n = 0;
    for (int i = 0; i < 1000; ++i) {
        const AngleError err{(rng.uniform() - 0.5) * 8.0 * cam.urad_per_pixel(),
                             (rng.uniform() - 0.5) * 8.0 * cam.urad_per_pixel()};
        const SpotImage img = render_spot(err, w, cam, rng);
        const Centroid c = centroid(img);
        REQUIRE(c.detected);
        sq += (c.x - img.true_x) * (c.x - img.true_x) + (c.y - img.true_y) * (c.y - img.true_y);
        ++n;
    }
    CHECK(std::sqrt(sq / n) < 0.1);
}

TEST_CASE("window shrinks after ten stable frames") {
    WindowPolicy policy;
    ReadoutWindow w{512, 1024, 1024, 0};
    Centroid c{true, 1024.0, 1024.0, 40.0, 9};
    for (int i = 0; i < 9; ++i) {
        w = select_window(w, c, policy);
        CHECK(w.size == 512);
    }
    w = select_window(w, c, policy);
    CHECK(w.size == 256);
}

TEST_CASE("edge centroid or miss grows one step") {
    WindowPolicy policy;
    ReadoutWindow w{128, 1024, 1024, 5};
    const Centroid edge{true, 1024.0 + 0.9 * 64.0, 1024.0, 40.0, 9};
    w = select_window(w, edge, policy);
    CHECK(w.size == 256);
    CHECK(w.stable_frames == 0);
    w = select_window(w, Centroid{}, policy);
    CHECK(w.size == 512);
    w = select_window(w, Centroid{}, policy);
    CHECK(w.size == 512);  // capped at the fine maximum
}

TEST_CASE("window moves at most one ladder step per decision") {
    WindowPolicy policy;
    Rng rng(5);
    ReadoutWindow w{512, 1024, 1024, 0};
    for (int i = 0; i < 5000; ++i) {
        Centroid c;
        if (rng.uniform() < 0.9) {
            c.detected = true;
            const double spread = rng.uniform() < 0.8 ? 0.1 : 0.95;
            c.x = w.center_x + (rng.uniform() - 0.5) * 2.0 * spread * 0.5 * w.size;
            c.y = w.center_y;
            c.snr = 40.0;
        }
        const ReadoutWindow next = select_window(w, c, policy);
        CHECK(is_ladder_size(next.size));
        const int ratio = next.size > w.size ? next.size / w.size : w.size / next.size;
        CHECK((ratio == 1 || ratio == 2));
        CHECK(next.size >= policy.min_size);
        CHECK(next.size <= policy.max_size);
        w = next;
    }
}

TEST_CASE("acquisition sequence and loss of lock") {
    AcquisitionState s;
    s = acquisition_step(s, {AcqEventKind::ScanStart});
    CHECK(s.phase == TrackPhase::CoarseScan);
    s = acquisition_step(s, {AcqEventKind::FineFovEntry});
    CHECK(s.phase == TrackPhase::CoarseScan);  // out-of-order events are ignored
    s = acquisition_step(s, {AcqEventKind::CoarseDetection});
    CHECK(s.phase == TrackPhase::CoarseTrack);
    s = acquisition_step(s, {AcqEventKind::FineFovEntry});
    CHECK(s.phase == TrackPhase::FineTrack);
    s = acquisition_step(s, {AcqEventKind::FineResidual, 38.0});
    CHECK(s.phase == TrackPhase::FineTrack);
    s = acquisition_step(s, {AcqEventKind::FineResidual, 37.9});
    CHECK(s.phase == TrackPhase::QuantumLink);

    AcquisitionState f;
    f.phase = TrackPhase::FineTrack;
    for (int i = 0; i < 4; ++i) f = acquisition_step(f, {AcqEventKind::NoDetection});
    CHECK(f.phase == TrackPhase::FineTrack);
    f = acquisition_step(f, {AcqEventKind::Detection});
    for (int i = 0; i < 4; ++i) f = acquisition_step(f, {AcqEventKind::NoDetection});
    CHECK(f.phase == TrackPhase::FineTrack);
    f = acquisition_step(f, {AcqEventKind::NoDetection});
    CHECK(f.phase == TrackPhase::CoarseTrack);
}

TEST_CASE("undisturbed loops settle below 1 urad within 1 s") {
    PatConfig cfg = default_run(true, 1.0);
    cfg.disturbance.vibration.clear();
    cfg.disturbance.white_jitter_urad = 0.0;
    cfg.initial_error_urad = 1000.0;
    cfg.settle_s = 0.0;
    const PatRun run = simulate_pat(cfg, Rng(7));
    REQUIRE_FALSE(run.samples.empty());
    CHECK(run.samples.back().residual.norm() < 1.0);
    CHECK(run.reached_quantum_link);
    CHECK_FALSE(run.saturated);
}

TEST_CASE("tracking statistics closed forms") {
    const std::vector<double> zeros(100, 0.0);
    const TrackingStats z = tracking_stats(zeros);
    CHECK(z.rms == 0.0);
    CHECK(z.p95 == 0.0);
    CHECK(z.lock_fraction == 1.0);

    const double a = 50.0;
    std::vector<double> sine(10000);
    for (std::size_t i = 0; i < sine.size(); ++i)
        sine[i] = a * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 100.0);
    CHECK(tracking_stats(sine).rms == doctest::Approx(a / std::sqrt(2.0)).epsilon(1e-9));

    std::vector<double> dropout(1000, 1.0);
    for (std::size_t i = 0; i < dropout.size(); i += 10) dropout[i] = 500.0;
    CHECK(tracking_stats(dropout).lock_fraction == doctest::Approx(0.9));
    CHECK_THROWS_AS(tracking_stats(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("calibrated loops meet the accuracy targets") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const PatRun fine = simulate_pat(default_run(true), Rng(seed));
        const PatRun coarse = simulate_pat(default_run(false), Rng(seed));
        REQUIRE(fine.stats.samples > 0);
        REQUIRE(coarse.stats.samples > 0);
        CHECK(fine.stats.rms <= 38.0);
        CHECK(coarse.stats.rms <= 323.0);
        CHECK(fine.stats.rms < coarse.stats.rms);
        CHECK(fine.reached_quantum_link);
        CHECK(fine.phase_history.front() == TrackPhase::Idle);
    }
}

TEST_CASE("projection round trip within 2% up to a quarter window") {
    for (const CameraModel& cam : {CameraModel::ground_fine(), CameraModel::drone_fine(), CameraModel::coarse()}) {
        const CameraModel quiet = [&] {
            CameraModel c = cam;
            c.read_noise = 1e-9;
            return c;
        }();
        ReadoutWindow w = initial_window(quiet);
        w.size = 256;
        Rng rng(8);
        for (double frac : {0.05, 0.1, 0.25}) {
            const double px = frac * w.size;
            const AngleError err{px * quiet.urad_per_pixel(), -0.5 * px * quiet.urad_per_pixel()};
            const Centroid c = centroid(render_spot(err, w, quiet, rng), quiet.background + 1e-6);
            REQUIRE(c.detected);
            const AngleError back = unproject(c.x, c.y, quiet);
            CHECK(back.az == doctest::Approx(err.az).epsilon(0.02));
            CHECK(back.el == doctest::Approx(err.el).epsilon(0.02));
        }
    }
}

TEST_CASE("pointing fade stays in (0, 1]") {
    const PatRun run = simulate_pat(default_run(true, 1.5), Rng(9));
    for (const PatSample& s : run.samples) {
        const double f = pointing_fade(s.residual.norm(), 200.0);
        CHECK(f > 0.0);
        CHECK(f <= 1.0);
    }
    CHECK(pointing_fade(0.0, 200.0) == 1.0);
    CHECK(pointing_fade(400.0, 200.0) == doctest::Approx(std::exp(-8.0)));
}

TEST_CASE("vibration list text round trip") {
    const auto v = parse_vibration("12:80,47.5:30");
    REQUIRE(v.size() == 2);
    CHECK(v[1].freq_hz == 47.5);
    CHECK(format_vibration(v) == "12:80,47.5:30");
    CHECK(parse_vibration("").empty());
    CHECK_THROWS_AS(parse_vibration("12"), std::invalid_argument);
    CHECK_THROWS_AS(parse_vibration("12:x"), std::invalid_argument);
}

}
