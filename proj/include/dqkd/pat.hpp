#pragma once

/**
 * @file pat.hpp
 * @brief Pointing, acquisition and tracking: spot imaging, centroiding,
 * windowed readout, the acquisition sequence and the nested coarse (gimbal)
 * and fine (steering mirror) loops.
 *
 * Angles are in microradians, image coordinates in pixels. Pixel i covers
 * [i, i + 1) with its center at i + 0.5; the optical axis meets the sensor
 * at (pixels / 2, pixels / 2).
 */

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dqkd/rng.hpp"

namespace dqkd {

struct AngleError {
    double az = 0.0;
    double el = 0.0;

    double norm() const;
    AngleError operator+(AngleError o) const { return {az + o.az, el + o.el}; }
    AngleError operator-(AngleError o) const { return {az - o.az, el - o.el}; }
    AngleError operator*(double k) const { return {az * k, el * k}; }
};

inline constexpr std::array<int, 5> kWindowLadder = {1024, 512, 256, 128, 64};

bool is_ladder_size(int size);

struct CameraModel {
    int pixels = 2048;
    double pixel_pitch_m = 5.5e-6;
    double focal_length_m = 0.260;
    int initial_window = 512;
    int max_window = 512;
    double exposure_s = 1e-3;
    double spot_sigma_px = 1.5;
    double spot_peak = 400.0;     ///< counts above background at the spot center
    double background = 20.0;
    double read_noise = 10.0;

    static CameraModel ground_fine();  ///< 260 mm receiver optics
    static CameraModel drone_fine();   ///< 172 mm transmitter optics
    static CameraModel coarse();       ///< wide-field acquisition camera

    double urad_per_pixel() const { return pixel_pitch_m / focal_length_m * 1e6; }
    double snr() const { return spot_peak / read_noise; }

    void validate() const;
};

struct ReadoutWindow {
    int size = 512;
    int center_x = 1024;
    int center_y = 1024;
    int stable_frames = 0;  ///< consecutive frames inside the inner quartile

    int origin_x() const { return center_x - size / 2; }
    int origin_y() const { return center_y - size / 2; }
};

ReadoutWindow initial_window(const CameraModel& cam);

/// Moves the window center to the nearest pixel boundary of (x, y), kept on the sensor.
ReadoutWindow recenter(ReadoutWindow w, double x, double y, const CameraModel& cam);

struct SpotImage {
    ReadoutWindow window;
    std::vector<double> pixels;  ///< row-major, window.size^2, all >= 0
    double true_x = 0.0;         ///< sensor coordinates of the spot center
    double true_y = 0.0;
    double background_level = 0.0;
    double noise_sigma = 0.0;
    bool spot_rendered = false;

    double at(int col, int row) const {
        return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(window.size) +
                      static_cast<std::size_t>(col)];
    }
};

/// Sensor position of a boresight error.
std::array<double, 2> project(AngleError err, const CameraModel& cam);

/// Gaussian spot plus background and read noise. When the spot center lies
/// outside the window or `illuminated` is false the frame holds background only.
SpotImage render_spot(AngleError err, const ReadoutWindow& window, const CameraModel& cam, Rng& rng,
                      bool illuminated = true);

struct Centroid {
    bool detected = false;
    double x = 0.0;  ///< sensor coordinates
    double y = 0.0;
    double snr = 0.0;
    std::size_t pixels_used = 0;
};

/// Background plus six read-noise standard deviations.
double default_threshold(const SpotImage& img);

/// Mean position over pixels above threshold, each weighted by its excess over the threshold.
Centroid centroid(const SpotImage& img, double threshold);
Centroid centroid(const SpotImage& img);

/// Angle corresponding to a sensor position.
AngleError unproject(double x, double y, const CameraModel& cam);

struct WindowPolicy {
    int min_size = 64;
    int max_size = 512;
    int stable_frames = 10;
    double inner_fraction = 0.25;  ///< shrink zone, fraction of the half-width
    double edge_fraction = 0.8;    ///< grow zone, fraction of the half-width
    double min_snr = 10.0;
};

/// One ladder step per call at most: shrink after `stable_frames` consecutive
/// centered frames with sufficient SNR, grow on an edge centroid or a miss.
ReadoutWindow select_window(ReadoutWindow w, const Centroid& obs, const WindowPolicy& policy);

enum class TrackPhase { Idle, CoarseScan, CoarseTrack, FineTrack, QuantumLink };
const char* to_string(TrackPhase phase);

enum class AcqEventKind {
    ScanStart,
    CoarseDetection,  ///< beacon spot on the coarse camera
    FineFovEntry,     ///< spot on the fine camera
    FineResidual,     ///< value: RMS of the last 10 fine frames, urad
    Detection,
    NoDetection,
};

struct AcqEvent {
    AcqEventKind kind;
    double value = 0.0;
};

struct AcquisitionState {
    TrackPhase phase = TrackPhase::Idle;
    int missed = 0;
    double handover_urad = 38.0;
    int loss_of_lock_frames = 5;
};

/// Forward moves follow the acquisition sequence; `loss_of_lock_frames`
/// consecutive misses regress one phase.
AcquisitionState acquisition_step(AcquisitionState s, AcqEvent event);

struct LoopGains {
    double kp = 0.0;
    double ki = 0.0;
    double rate_hz = 0.0;
};

struct ControlConfig {
    LoopGains coarse{6.0, 20.0, 50.0};   ///< gimbal rate command, 1/s and 1/s^2
    LoopGains fine{0.1, 400.0, 500.0};   ///< mirror position command, 1 and 1/s
    double fsm_tau_s = 1e-3;
    double fsm_limit_urad = 2000.0;
    double gimbal_rate_limit_urad_s = 2e5;

    void validate() const;
};

/// Gimbal is a rate actuator; the mirror follows its command with a first-order lag.
struct ActuatorState {
    AngleError gimbal;
    AngleError gimbal_rate;
    AngleError fsm;
    AngleError fsm_command;
    AngleError coarse_integral;
    AngleError fine_integral;
    bool saturated = false;
};

enum class LoopKind { Coarse, Fine };

/// PI update of one loop from a measured error taken at that loop's frame rate.
void control_step(ActuatorState& act, AngleError measured, LoopKind loop, const ControlConfig& cfg);

/// Integrates both actuators over dt.
void advance_actuators(ActuatorState& act, const ControlConfig& cfg, double dt);

struct Vibration {
    double freq_hz = 0.0;
    double amp_urad = 0.0;
};

struct DisturbanceProfile {
    std::vector<Vibration> vibration{{12.0, 80.0}, {47.0, 30.0}};
    double white_jitter_urad = 15.0;      ///< per axis, per simulation step
    double slew_rate_urad_s = 0.0;        ///< azimuth rate from the trajectory
    double slew_half_period_s = 0.0;      ///< triangular sweep; 0 = one-way ramp

    void validate() const;
    /// Azimuth offset of the trajectory at time t.
    double slew_offset(double t) const;
};

/// "f:a,f:a" list of frequency (Hz) and peak amplitude (urad).
std::vector<Vibration> parse_vibration(std::string_view text);
std::string format_vibration(std::span<const Vibration> list);

struct TrackingStats {
    double rms = 0.0;
    double p95 = 0.0;
    double lock_fraction = 0.0;
    std::size_t samples = 0;
};

/// Statistics of a residual series; p95 and lock use absolute values.
TrackingStats tracking_stats(std::span<const double> series, double handover_urad = 38.0);

struct PatConfig {
    CameraModel coarse_camera = CameraModel::coarse();
    CameraModel fine_camera = CameraModel::ground_fine();
    WindowPolicy coarse_policy{64, 1024, 10, 0.25, 0.8, 10.0};
    WindowPolicy fine_policy{64, 512, 10, 0.25, 0.8, 10.0};
    ControlConfig control;
    DisturbanceProfile disturbance;
    bool fine_loop = true;
    double sim_dt_s = 2e-4;
    double duration_s = 3.0;
    double initial_error_urad = 5000.0;
    double beacon_capture_urad = 2000.0;  ///< beacon reaches the receiver inside this error
    double scan_pitch_urad = 1500.0;      ///< spiral arm spacing
    double scan_step_urad = 1000.0;       ///< spiral advance per coarse frame
    double handover_urad = 38.0;
    double settle_s = 0.5;                ///< excluded from steady-state statistics

    void validate() const;
};

struct PatSample {
    double time_s = 0.0;
    AngleError residual;
    TrackPhase phase = TrackPhase::Idle;
};

struct PatRun {
    std::vector<PatSample> samples;         ///< one per fine-frame period
    std::vector<TrackPhase> phase_history;  ///< every phase entered, in order
    std::vector<double> steady_residuals;   ///< radial, after settling in the final loop
    TrackingStats stats;
    bool reached_quantum_link = false;
    double quantum_link_time_s = -1.0;
    bool saturated = false;
    double sample_dt_s = 0.0;
};

/// Closed-loop run from Idle. Steady-state statistics come from the final
/// tracking phase (FineTrack or QuantumLink with the fine loop, CoarseTrack
/// without), starting settle_s after it was entered.
PatRun simulate_pat(const PatConfig& cfg, Rng rng);

/// Writes time_s, az_urad, el_urad, phase.
void write_pat_csv(std::ostream& os, const PatRun& run);

}  // namespace dqkd
