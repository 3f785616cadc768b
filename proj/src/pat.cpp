#include "dqkd/pat.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace dqkd {

namespace {

constexpr double kTwoPiPat = 2.0 * std::numbers::pi;

double clamp_abs(double v, double limit, bool& hit) {
    if (v > limit) { hit = true; return limit; }
    if (v < -limit) { hit = true; return -limit; }
    return v;
}

int ladder_index(int size) {
    for (std::size_t i = 0; i < kWindowLadder.size(); ++i)
        if (kWindowLadder[i] == size) return static_cast<int>(i);
    throw std::invalid_argument("window size not on the readout ladder");
}

bool in_group(TrackPhase p, bool fine) {
    return fine ? (p == TrackPhase::FineTrack || p == TrackPhase::QuantumLink) : p == TrackPhase::CoarseTrack;
}

}  // namespace

double AngleError::norm() const { return std::hypot(az, el); }

bool is_ladder_size(int size) {
    return std::find(kWindowLadder.begin(), kWindowLadder.end(), size) != kWindowLadder.end();
}

CameraModel CameraModel::ground_fine() { return {}; }

CameraModel CameraModel::drone_fine() {
    CameraModel c;
    c.focal_length_m = 0.172;
    return c;
}

CameraModel CameraModel::coarse() {
    CameraModel c;
    c.focal_length_m = 0.05;
    c.initial_window = 1024;
    c.max_window = 1024;
    c.exposure_s = 5e-3;
    return c;
}

void CameraModel::validate() const {
    if (pixels < 64 || pixels % 2 != 0) throw std::invalid_argument("camera pixels must be even and >= 64");
    if (!(pixel_pitch_m > 0.0) || !(focal_length_m > 0.0))
        throw std::invalid_argument("pixel pitch and focal length must be > 0");
    if (!is_ladder_size(initial_window) || !is_ladder_size(max_window) || initial_window > max_window ||
        max_window > pixels)
        throw std::invalid_argument("camera windows must be ladder sizes within the sensor");
    if (!(exposure_s > 0.0) || !(spot_sigma_px > 0.0) || !(spot_peak > 0.0) || !(read_noise > 0.0) ||
        !(background >= 0.0))
        throw std::invalid_argument("camera photometry must be positive");
}

ReadoutWindow initial_window(const CameraModel& cam) {
    return {cam.initial_window, cam.pixels / 2, cam.pixels / 2, 0};
}

ReadoutWindow recenter(ReadoutWindow w, double x, double y, const CameraModel& cam) {
    const int half = w.size / 2;
    w.center_x = std::clamp(static_cast<int>(std::lround(x)), half, cam.pixels - half);
    w.center_y = std::clamp(static_cast<int>(std::lround(y)), half, cam.pixels - half);
    return w;
}

std::array<double, 2> project(AngleError err, const CameraModel& cam) {
    const double k = 1.0 / cam.urad_per_pixel();
    const double c = 0.5 * static_cast<double>(cam.pixels);
    return {c + err.az * k, c + err.el * k};
}

AngleError unproject(double x, double y, const CameraModel& cam) {
    const double c = 0.5 * static_cast<double>(cam.pixels);
    return {(x - c) * cam.urad_per_pixel(), (y - c) * cam.urad_per_pixel()};
}

SpotImage render_spot(AngleError err, const ReadoutWindow& window, const CameraModel& cam, Rng& rng,
                      bool illuminated) {
    SpotImage img;
    img.window = window;
    img.background_level = cam.background;
    img.noise_sigma = cam.read_noise;
    const auto [x, y] = project(err, cam);
    img.true_x = x;
    img.true_y = y;

    const int n = window.size;
    const double ox = window.origin_x(), oy = window.origin_y();
    img.spot_rendered = illuminated && x >= ox && x < ox + n && y >= oy && y < oy + n;

    // The Gaussian is separable, so one exp per row and per column suffices.
    std::vector<double> gx(static_cast<std::size_t>(n), 0.0), gy(static_cast<std::size_t>(n), 0.0);
    if (img.spot_rendered) {
        const double inv = 1.0 / (2.0 * cam.spot_sigma_px * cam.spot_sigma_px);
        for (int i = 0; i < n; ++i) {
            const double dx = ox + i + 0.5 - x;
            const double dy = oy + i + 0.5 - y;
            gx[static_cast<std::size_t>(i)] = std::exp(-dx * dx * inv);
            gy[static_cast<std::size_t>(i)] = cam.spot_peak * std::exp(-dy * dy * inv);
        }
    }
    img.pixels.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    std::size_t k = 0;
    for (int r = 0; r < n; ++r) {
        const double row = gy[static_cast<std::size_t>(r)];
        for (int c = 0; c < n; ++c, ++k) {
            const double v = cam.background + row * gx[static_cast<std::size_t>(c)] + rng.normal(cam.read_noise);
            img.pixels[k] = std::max(0.0, v);
        }
    }
    return img;
}

double default_threshold(const SpotImage& img) { return img.background_level + 6.0 * img.noise_sigma; }

Centroid centroid(const SpotImage& img) { return centroid(img, default_threshold(img)); }

Centroid centroid(const SpotImage& img, double threshold) {
    Centroid c;
    const int n = img.window.size;
    double sw = 0.0, sx = 0.0, sy = 0.0, peak = 0.0;
    for (int r = 0; r < n; ++r) {
        for (int col = 0; col < n; ++col) {
            const double v = img.at(col, r);
            if (v <= threshold) continue;
            // Weighting by the excess over threshold keeps pixels that flicker
            // across it from jerking the estimate.
            const double w = v - threshold;
            sw += w;
            sx += w * (img.window.origin_x() + col + 0.5);
            sy += w * (img.window.origin_y() + r + 0.5);
            peak = std::max(peak, v - img.background_level);
            ++c.pixels_used;
        }
    }
    if (c.pixels_used == 0 || !(sw > 0.0)) return c;
    c.detected = true;
    c.x = sx / sw;
    c.y = sy / sw;
    c.snr = img.noise_sigma > 0.0 ? peak / img.noise_sigma : 0.0;
    return c;
}

ReadoutWindow select_window(ReadoutWindow w, const Centroid& obs, const WindowPolicy& policy) {
    const int idx = ladder_index(w.size);
    auto grow = [&]() {
        w.stable_frames = 0;
        if (idx > 0 && kWindowLadder[static_cast<std::size_t>(idx - 1)] <= policy.max_size)
            w.size = kWindowLadder[static_cast<std::size_t>(idx - 1)];
        return w;
    };
    if (!obs.detected) return grow();

    const double half = 0.5 * w.size;
    const double offset = std::max(std::abs(obs.x - w.center_x), std::abs(obs.y - w.center_y));
    if (offset >= policy.edge_fraction * half) return grow();
    if (offset <= policy.inner_fraction * half && obs.snr >= policy.min_snr)
        ++w.stable_frames;
    else
        w.stable_frames = 0;
    if (w.stable_frames >= policy.stable_frames) {
        w.stable_frames = 0;
        if (idx + 1 < static_cast<int>(kWindowLadder.size()) &&
            kWindowLadder[static_cast<std::size_t>(idx + 1)] >= policy.min_size)
            w.size = kWindowLadder[static_cast<std::size_t>(idx + 1)];
    }
    return w;
}

const char* to_string(TrackPhase phase) {
    switch (phase) {
        case TrackPhase::Idle: return "idle";
        case TrackPhase::CoarseScan: return "coarse_scan";
        case TrackPhase::CoarseTrack: return "coarse_track";
        case TrackPhase::FineTrack: return "fine_track";
        case TrackPhase::QuantumLink: return "quantum_link";
    }
    return "?";
}

AcquisitionState acquisition_step(AcquisitionState s, AcqEvent event) {
    switch (event.kind) {
        case AcqEventKind::ScanStart:
            if (s.phase == TrackPhase::Idle) s.phase = TrackPhase::CoarseScan;
            break;
        case AcqEventKind::CoarseDetection:
            if (s.phase == TrackPhase::CoarseScan) {
                s.phase = TrackPhase::CoarseTrack;
                s.missed = 0;
            }
            break;
        case AcqEventKind::FineFovEntry:
            if (s.phase == TrackPhase::CoarseTrack) {
                s.phase = TrackPhase::FineTrack;
                s.missed = 0;
            }
            break;
        case AcqEventKind::FineResidual:
            if (s.phase == TrackPhase::FineTrack && event.value < s.handover_urad) s.phase = TrackPhase::QuantumLink;
            break;
        case AcqEventKind::Detection:
            s.missed = 0;
            break;
        case AcqEventKind::NoDetection:
            if (s.phase == TrackPhase::Idle || s.phase == TrackPhase::CoarseScan) break;
            if (++s.missed >= s.loss_of_lock_frames) {
                s.missed = 0;
                s.phase = static_cast<TrackPhase>(static_cast<int>(s.phase) - 1);
            }
            break;
    }
    return s;
}

void ControlConfig::validate() const {
    for (const LoopGains* g : {&coarse, &fine})
        if (!(g->kp >= 0.0) || !(g->ki >= 0.0) || !(g->rate_hz > 0.0))
            throw std::invalid_argument("loop gains must be >= 0 and rates > 0");
    if (!(fine.rate_hz > coarse.rate_hz)) throw std::invalid_argument("fine loop must run faster than coarse");
    if (!(fsm_tau_s > 0.0) || !(fsm_limit_urad > 0.0) || !(gimbal_rate_limit_urad_s > 0.0))
        throw std::invalid_argument("actuator limits must be > 0");
}

void control_step(ActuatorState& act, AngleError measured, LoopKind loop, const ControlConfig& cfg) {
    if (loop == LoopKind::Coarse) {
        const double dt = 1.0 / cfg.coarse.rate_hz;
        act.coarse_integral = act.coarse_integral + measured * dt;
        const AngleError cmd = measured * cfg.coarse.kp + act.coarse_integral * cfg.coarse.ki;
        act.gimbal_rate = {clamp_abs(cmd.az, cfg.gimbal_rate_limit_urad_s, act.saturated),
                           clamp_abs(cmd.el, cfg.gimbal_rate_limit_urad_s, act.saturated)};
        return;
    }
    const double dt = 1.0 / cfg.fine.rate_hz;
    act.fine_integral = act.fine_integral + measured * dt;
    // Anti-windup: the integral alone may not drive the mirror past its stop.
    const double ilimit = cfg.fsm_limit_urad / std::max(cfg.fine.ki, 1e-12);
    bool ignored = false;
    act.fine_integral = {clamp_abs(act.fine_integral.az, ilimit, ignored),
                         clamp_abs(act.fine_integral.el, ilimit, ignored)};
    const AngleError cmd = measured * cfg.fine.kp + act.fine_integral * cfg.fine.ki;
    act.fsm_command = {clamp_abs(cmd.az, cfg.fsm_limit_urad, act.saturated),
                       clamp_abs(cmd.el, cfg.fsm_limit_urad, act.saturated)};
}

void advance_actuators(ActuatorState& act, const ControlConfig& cfg, double dt) {
    act.gimbal = act.gimbal + act.gimbal_rate * dt;
    const double alpha = 1.0 - std::exp(-dt / cfg.fsm_tau_s);
    act.fsm = act.fsm + (act.fsm_command - act.fsm) * alpha;
}

void DisturbanceProfile::validate() const {
    for (const Vibration& v : vibration)
        if (!(v.freq_hz > 0.0) || !(v.amp_urad >= 0.0) || !std::isfinite(v.freq_hz) || !std::isfinite(v.amp_urad))
            throw std::invalid_argument("vibration terms need freq > 0 and amplitude >= 0");
    if (!(white_jitter_urad >= 0.0) || !std::isfinite(white_jitter_urad))
        throw std::invalid_argument("white jitter must be >= 0");
    if (!std::isfinite(slew_rate_urad_s) || !(slew_half_period_s >= 0.0))
        throw std::invalid_argument("slew must be finite with a nonnegative half period");
}

double DisturbanceProfile::slew_offset(double t) const {
    if (slew_half_period_s <= 0.0) return slew_rate_urad_s * t;
    const double period = 2.0 * slew_half_period_s;
    const double phase = std::fmod(t, period);
    const double up = std::min(phase, slew_half_period_s);
    const double down = std::max(0.0, phase - slew_half_period_s);
    return slew_rate_urad_s * (up - down);
}

std::vector<Vibration> parse_vibration(std::string_view text) {
    std::vector<Vibration> out;
    if (text.empty()) return out;
    auto number = [](std::string_view s) {
        double v = 0.0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size() || s.empty())
            throw std::invalid_argument("vibration: bad number '" + std::string(s) + "'");
        return v;
    };
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string_view item = text.substr(pos, comma - pos);
        const std::size_t colon = item.find(':');
        if (colon == std::string_view::npos)
            throw std::invalid_argument("vibration: expected freq:amp, got '" + std::string(item) + "'");
        out.push_back({number(item.substr(0, colon)), number(item.substr(colon + 1))});
        pos = comma + 1;
    }
    return out;
}

std::string format_vibration(std::span<const Vibration> list) {
    std::string s;
    for (const Vibration& v : list) {
        if (!s.empty()) s += ',';
        char buf[64];
        auto r = std::to_chars(buf, buf + sizeof buf, v.freq_hz);
        s.append(buf, r.ptr);
        s += ':';
        r = std::to_chars(buf, buf + sizeof buf, v.amp_urad);
        s.append(buf, r.ptr);
    }
    return s;
}

TrackingStats tracking_stats(std::span<const double> series, double handover_urad) {
    if (series.empty()) throw std::invalid_argument("tracking_stats needs a nonempty series");
    TrackingStats st;
    st.samples = series.size();
    double sq = 0.0;
    std::size_t locked = 0;
    std::vector<double> mag(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        sq += series[i] * series[i];
        mag[i] = std::abs(series[i]);
        if (mag[i] < handover_urad) ++locked;
    }
    st.rms = std::sqrt(sq / static_cast<double>(series.size()));
    st.lock_fraction = static_cast<double>(locked) / static_cast<double>(series.size());
    const auto k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(mag.size()))) - 1;
    std::nth_element(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(k), mag.end());
    st.p95 = mag[k];
    return st;
}

void PatConfig::validate() const {
    coarse_camera.validate();
    fine_camera.validate();
    control.validate();
    disturbance.validate();
    if (!(sim_dt_s > 0.0) || !(duration_s > 0.0)) throw std::invalid_argument("PAT durations must be > 0");
    const double fine_steps = 1.0 / (control.fine.rate_hz * sim_dt_s);
    const double coarse_steps = 1.0 / (control.coarse.rate_hz * sim_dt_s);
    if (std::abs(fine_steps - std::round(fine_steps)) > 1e-9 || std::abs(coarse_steps - std::round(coarse_steps)) > 1e-9)
        throw std::invalid_argument("loop periods must be whole multiples of the simulation step");
    if (!(initial_error_urad >= 0.0) || !(beacon_capture_urad > 0.0) || !(scan_pitch_urad > 0.0) ||
        !(scan_step_urad > 0.0) || !(handover_urad > 0.0) || !(settle_s >= 0.0))
        throw std::invalid_argument("PAT acquisition parameters out of range");
    if (scan_pitch_urad >= 2.0 * beacon_capture_urad)
        throw std::invalid_argument("scan pitch must be below twice the beacon capture radius");
}

PatRun simulate_pat(const PatConfig& cfg, Rng rng) {
    cfg.validate();
    Rng geometry = rng.split(1);
    Rng jitter = rng.split(2);
    Rng coarse_noise = rng.split(3);
    Rng fine_noise = rng.split(4);

    // Each vibration line shakes along its own fixed direction.
    struct Line {
        double omega, amp, phase, ca, sa;
    };
    std::vector<Line> lines;
    for (const Vibration& v : cfg.disturbance.vibration) {
        const double dir = kTwoPiPat * geometry.uniform();
        lines.push_back({kTwoPiPat * v.freq_hz, v.amp_urad, kTwoPiPat * geometry.uniform(), std::cos(dir),
                         std::sin(dir)});
    }
    const double err_dir = kTwoPiPat * geometry.uniform();
    const AngleError initial{cfg.initial_error_urad * std::cos(err_dir), cfg.initial_error_urad * std::sin(err_dir)};

    const auto per_fine = static_cast<long>(std::lround(1.0 / (cfg.control.fine.rate_hz * cfg.sim_dt_s)));
    const auto per_coarse = static_cast<long>(std::lround(1.0 / (cfg.control.coarse.rate_hz * cfg.sim_dt_s)));
    const auto steps = static_cast<long>(std::llround(cfg.duration_s / cfg.sim_dt_s));

    PatRun run;
    run.sample_dt_s = static_cast<double>(per_fine) * cfg.sim_dt_s;
    AcquisitionState acq;
    acq.handover_urad = cfg.handover_urad;
    ActuatorState act;
    ReadoutWindow cwin = initial_window(cfg.coarse_camera);
    ReadoutWindow fwin = initial_window(cfg.fine_camera);
    std::vector<double> recent;  // last measured fine errors, urad
    AngleError scan_center;
    double scan_theta = 0.0;
    double group_entry = -1.0;

    auto set_phase = [&](AcquisitionState next, double t) {
        if (next.phase != acq.phase) {
            run.phase_history.push_back(next.phase);
            if (in_group(next.phase, cfg.fine_loop) && !in_group(acq.phase, cfg.fine_loop)) group_entry = t;
            if (next.phase == TrackPhase::QuantumLink && !run.reached_quantum_link) {
                run.reached_quantum_link = true;
                run.quantum_link_time_s = t;
            }
            if (next.phase < TrackPhase::FineTrack && acq.phase >= TrackPhase::FineTrack) {
                act.fsm_command = {};
                act.fine_integral = {};
                fwin = initial_window(cfg.fine_camera);
                recent.clear();
            }
            if (next.phase == TrackPhase::CoarseScan && acq.phase == TrackPhase::CoarseTrack) {
                act.gimbal_rate = {};
                act.coarse_integral = {};
                scan_center = act.gimbal - AngleError{cfg.disturbance.slew_offset(t), 0.0};
                scan_theta = 0.0;
                cwin = initial_window(cfg.coarse_camera);
            }
        }
        acq = next;
    };

    run.phase_history.push_back(acq.phase);
    set_phase(acquisition_step(acq, {AcqEventKind::ScanStart}), 0.0);

    for (long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * cfg.sim_dt_s;
        AngleError d = initial + AngleError{cfg.disturbance.slew_offset(t), 0.0};
        for (const Line& l : lines) {
            const double s = l.amp * std::sin(l.omega * t + l.phase);
            d = d + AngleError{s * l.ca, s * l.sa};
        }
        d = d + AngleError{jitter.normal(cfg.disturbance.white_jitter_urad),
                           jitter.normal(cfg.disturbance.white_jitter_urad)};

        const AngleError line_of_sight = d - act.gimbal;
        const bool illuminated = line_of_sight.norm() < cfg.beacon_capture_urad;

        if (k % per_coarse == 0) {
            if (acq.phase == TrackPhase::CoarseScan) {
                // Frames without the beacon in view hold background only and
                // cannot produce a detection; they are not rendered.
                Centroid c;
                if (illuminated) c = centroid(render_spot(line_of_sight, cwin, cfg.coarse_camera, coarse_noise));
                if (c.detected) {
                    cwin = recenter(cwin, c.x, c.y, cfg.coarse_camera);
                    set_phase(acquisition_step(acq, {AcqEventKind::CoarseDetection}), t);
                } else {
                    const double r = cfg.scan_pitch_urad * scan_theta / kTwoPiPat;
                    scan_theta += cfg.scan_step_urad / std::max(r, cfg.scan_step_urad);
                    const double r2 = cfg.scan_pitch_urad * scan_theta / kTwoPiPat;
                    // The spiral is laid around the position predicted from the
                    // known trajectory, so a moving partner stays inside it.
                    const AngleError predicted{cfg.disturbance.slew_offset(t), 0.0};
                    act.gimbal = scan_center + predicted +
                                 AngleError{r2 * std::cos(scan_theta), r2 * std::sin(scan_theta)};
                }
            } else if (acq.phase >= TrackPhase::CoarseTrack) {
                const Centroid c =
                    centroid(render_spot(line_of_sight, cwin, cfg.coarse_camera, coarse_noise, illuminated));
                cwin = select_window(cwin, c, cfg.coarse_policy);
                if (c.detected) {
                    control_step(act, unproject(c.x, c.y, cfg.coarse_camera), LoopKind::Coarse, cfg.control);
                    cwin = recenter(cwin, c.x, c.y, cfg.coarse_camera);
                    if (acq.phase == TrackPhase::CoarseTrack)
                        set_phase(acquisition_step(acq, {AcqEventKind::Detection}), t);
                } else if (acq.phase == TrackPhase::CoarseTrack) {
                    set_phase(acquisition_step(acq, {AcqEventKind::NoDetection}), t);
                }
            }
        }

        if (cfg.fine_loop && k % per_fine == 0 && acq.phase >= TrackPhase::CoarseTrack) {
            const AngleError fine_err = line_of_sight - act.fsm;
            const Centroid c = centroid(render_spot(fine_err, fwin, cfg.fine_camera, fine_noise, illuminated));
            if (acq.phase == TrackPhase::CoarseTrack) {
                if (c.detected) {
                    fwin = recenter(fwin, c.x, c.y, cfg.fine_camera);
                    set_phase(acquisition_step(acq, {AcqEventKind::FineFovEntry}), t);
                }
            } else {
                fwin = select_window(fwin, c, cfg.fine_policy);
                if (c.detected) {
                    const AngleError m = unproject(c.x, c.y, cfg.fine_camera);
                    control_step(act, m, LoopKind::Fine, cfg.control);
                    fwin = recenter(fwin, c.x, c.y, cfg.fine_camera);
                    recent.push_back(m.norm());
                    if (recent.size() > 10) recent.erase(recent.begin());
                    set_phase(acquisition_step(acq, {AcqEventKind::Detection}), t);
                    if (recent.size() == 10) {
                        double sq = 0.0;
                        for (double v : recent) sq += v * v;
                        set_phase(acquisition_step(acq, {AcqEventKind::FineResidual, std::sqrt(sq / 10.0)}), t);
                    }
                } else {
                    set_phase(acquisition_step(acq, {AcqEventKind::NoDetection}), t);
                }
            }
        }

        if (k % per_fine == 0) {
            const AngleError residual = d - act.gimbal - act.fsm;
            run.samples.push_back({t, residual, acq.phase});
            if (group_entry >= 0.0 && in_group(acq.phase, cfg.fine_loop) && t >= group_entry + cfg.settle_s)
                run.steady_residuals.push_back(residual.norm());
        }
        advance_actuators(act, cfg.control, cfg.sim_dt_s);
    }
    run.saturated = act.saturated;
    if (!run.steady_residuals.empty()) run.stats = tracking_stats(run.steady_residuals, cfg.handover_urad);
    return run;
}

void write_pat_csv(std::ostream& os, const PatRun& run) {
    os << "time_s,az_urad,el_urad,phase\n";
    char buf[64];
    auto put = [&](double v) {
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        os.write(buf, r.ptr - buf);
    };
    for (const PatSample& s : run.samples) {
        put(s.time_s);
        os << ',';
        put(s.residual.az);
        os << ',';
        put(s.residual.el);
        os << ',' << to_string(s.phase) << '\n';
    }
}

}  // namespace dqkd
