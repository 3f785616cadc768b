#pragma once

/**
 * @file sync.hpp
 * @brief Phase-modulator synchronization: sync frames, the PM3 voltage scan,
 * the windowed pattern correlator and the sync/key phase switch.
 *
 * Sync pulses are launched with phi1 = pi/2 (full radius) at amplitude
 * sync_amp. The receiver thresholds their projection on the diagonal of the
 * (s2, s3) plane, i.e. the direction where s2 and s3 are equal and both
 * positive. The scan picks the phi2 that lands the received pulses on that
 * diagonal despite slow drift.
 */

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dqkd/channel.hpp"
#include "dqkd/stokes.hpp"

namespace dqkd {

inline constexpr std::size_t kSyncPatternLength = 10;
inline constexpr double kMaxSyncDutyCycle = 0.01;

/// phi2 that puts an undisturbed sync pulse on the detection diagonal.
inline constexpr double kDiagonalPhase = kPi / 4.0;

using SyncPattern = std::array<bool, kSyncPatternLength>;

/// Parses a 10-character '0'/'1' string in transmission order.
SyncPattern parse_sync_pattern(std::string_view bits);
std::string format_sync_pattern(const SyncPattern& pattern);

struct SyncConfig {
    SyncPattern pattern = parse_sync_pattern("0000010110");
    double amp_threshold = 6.0;  ///< detection threshold on the diagonal projection, SNU
    double sync_amp = 20.0;      ///< sync drive amplitude, SNU
    std::size_t window_len = 1001;
    std::size_t scan_points = 256;

    /// One frame per window.
    double duty_cycle() const {
        return static_cast<double>(kSyncPatternLength) / static_cast<double>(window_len);
    }

    /// Enforces sync_amp > amp_threshold > 3, duty cycle < 1 % and a non-empty scan grid.
    void validate() const;
};

struct SyncDecision {
    bool matched = false;
    std::size_t offset = 0;  ///< start of the first full match, or of the best partial
    int score = 0;           ///< matching slots, 0..10
};

struct ScanPoint {
    double phase = 0.0;
    double amplitude = 0.0;  ///< measured diagonal projection
};

struct ScanResult {
    double best_voltage_phase = 0.0;
    double best_amplitude = 0.0;  ///< max of grid amplitudes
    std::vector<ScanPoint> grid;
};

class ScanFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Returns the measured (s2, s3) for a sync pulse sent at the given phi2.
using LinkProbe = std::function<QuadraturePair(double phi2)>;

/// (s2 + s3) / sqrt(2)
double diagonal_projection(double s2, double s3);

/// Drive phases for one frame; bit 0 is the pi-shifted (negative) level.
std::vector<DrivePhases> build_sync_frame(const SyncConfig& cfg,
                                          double sync_phase = kDiagonalPhase);

/// Readout configuration for sync pulses: full radius equals sync_amp.
ModulationConfig sync_modulation(const SyncConfig& cfg, const ModulationConfig& data);

/**
 * Sweeps phi2 over scan_points equally spaced values with phi1 = pi/2.
 *
 * The optimum is the grid point nearest the peak of the first Fourier
 * harmonic of the measured amplitude curve; the harmonic fit averages the
 * probe noise over the whole sweep instead of trusting a single sample.
 * Throws ScanFailure when no grid point reaches amp_threshold, or when
 * either component at the optimum stays under its share of the threshold.
 */
ScanResult scan_pm3(const SyncConfig& cfg, const LinkProbe& probe);

/// Slides the 10-slot correlator over `samples`. A slot reads 1 above
/// +threshold, 0 below -threshold, and is invalid in between.
SyncDecision detect_sync(std::span<const HeterodyneSample> samples, const SyncConfig& cfg);

enum class SyncPhase { Scanning, Syncing, Keying };
enum class SyncEvent { ScanSucceeded, ScanFailed, SyncMatched, SyncUnmatched, ResyncRequested };

SyncPhase sync_session_step(SyncPhase phase, SyncEvent event);

const char* to_string(SyncPhase phase);

}  // namespace dqkd
