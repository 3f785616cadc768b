#include "dqkd/sync.hpp"

#include <algorithm>
#include <cmath>

namespace dqkd {

SyncPattern parse_sync_pattern(std::string_view bits) {
    if (bits.size() != kSyncPatternLength)
        throw std::invalid_argument("sync pattern must have exactly 10 bits");
    SyncPattern p{};
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != '0' && bits[i] != '1')
            throw std::invalid_argument("sync pattern may only contain '0' and '1'");
        p[i] = bits[i] == '1';
    }
    return p;
}

std::string format_sync_pattern(const SyncPattern& pattern) {
    std::string s;
    for (bool b : pattern) s.push_back(b ? '1' : '0');
    return s;
}

void SyncConfig::validate() const {
    if (!(amp_threshold > 3.0))
        throw std::invalid_argument("amp_threshold must exceed 3 (noise floor)");
    if (!(sync_amp > amp_threshold))
        throw std::invalid_argument("sync_amp must exceed amp_threshold");
    if (window_len < kSyncPatternLength)
        throw std::invalid_argument("window_len must hold at least one frame");
    if (!(duty_cycle() < kMaxSyncDutyCycle))
        throw std::invalid_argument("sync duty cycle must stay below 1% (window_len > 1000)");
    if (scan_points < 4)
        throw std::invalid_argument("scan_points must be >= 4");
}

double diagonal_projection(double s2, double s3) {
    return (s2 + s3) / std::sqrt(2.0);
}

std::vector<DrivePhases> build_sync_frame(const SyncConfig& cfg, double sync_phase) {
    std::vector<DrivePhases> frame;
    frame.reserve(kSyncPatternLength);
    for (bool bit : cfg.pattern)
        frame.push_back(DrivePhases::wrapped(kPi / 2.0, bit ? sync_phase : sync_phase + kPi));
    return frame;
}

ModulationConfig sync_modulation(const SyncConfig& cfg, const ModulationConfig& data) {
    return {data.v1, data.a_lo, cfg.sync_amp};
}

ScanResult scan_pm3(const SyncConfig& cfg, const LinkProbe& probe) {
    ScanResult result;
    result.grid.reserve(cfg.scan_points);
    const double step = kTwoPi / static_cast<double>(cfg.scan_points);

    double c = 0.0, s = 0.0;
    std::vector<QuadraturePair> raw;
    raw.reserve(cfg.scan_points);
    for (std::size_t k = 0; k < cfg.scan_points; ++k) {
        const double phase = step * static_cast<double>(k);
        const QuadraturePair m = probe(phase);
        const double amp = diagonal_projection(m.x, m.p);
        raw.push_back(m);
        result.grid.push_back({phase, amp});
        c += amp * std::cos(phase);
        s += amp * std::sin(phase);
    }

    const auto max_it = std::max_element(result.grid.begin(), result.grid.end(),
                                         [](const ScanPoint& a, const ScanPoint& b) {
                                             return a.amplitude < b.amplitude;
                                         });
    result.best_amplitude = max_it->amplitude;
    if (result.best_amplitude < cfg.amp_threshold)
        throw ScanFailure("PM3 scan: no grid point reached the sync threshold");

    const double peak = wrap_phase(std::atan2(s, c));
    const auto best = static_cast<std::size_t>(std::lround(peak / step)) % cfg.scan_points;
    result.best_voltage_phase = result.grid[best].phase;

    // Both components must clear their share of the diagonal threshold.
    const double component_threshold = cfg.amp_threshold / std::sqrt(2.0);
    if (raw[best].x < component_threshold || raw[best].p < component_threshold)
        throw ScanFailure("PM3 scan: s2 and s3 did not both reach their thresholds");
    return result;
}

SyncDecision detect_sync(std::span<const HeterodyneSample> samples, const SyncConfig& cfg) {
    SyncDecision best;
    if (samples.size() < kSyncPatternLength) return best;

    // +1 / 0 for the two levels, -1 for a slot between the thresholds.
    std::vector<signed char> slot(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = diagonal_projection(samples[i].s2, samples[i].s3);
        slot[i] = d > cfg.amp_threshold ? 1 : (d < -cfg.amp_threshold ? 0 : -1);
    }

    for (std::size_t off = 0; off + kSyncPatternLength <= samples.size(); ++off) {
        int score = 0;
        for (std::size_t b = 0; b < kSyncPatternLength; ++b)
            if (slot[off + b] == (cfg.pattern[b] ? 1 : 0)) ++score;
        if (score > best.score) {
            best.score = score;
            best.offset = off;
        }
        if (score == static_cast<int>(kSyncPatternLength)) {
            best.matched = true;
            return best;
        }
    }
    return best;
}

SyncPhase sync_session_step(SyncPhase phase, SyncEvent event) {
    switch (phase) {
        case SyncPhase::Scanning:
            return event == SyncEvent::ScanSucceeded ? SyncPhase::Syncing : phase;
        case SyncPhase::Syncing:
            return event == SyncEvent::SyncMatched ? SyncPhase::Keying : phase;
        case SyncPhase::Keying:
            return event == SyncEvent::ResyncRequested ? SyncPhase::Scanning : phase;
    }
    return phase;
}

const char* to_string(SyncPhase phase) {
    switch (phase) {
        case SyncPhase::Scanning: return "scanning";
        case SyncPhase::Syncing: return "syncing";
        case SyncPhase::Keying: return "keying";
    }
    return "?";
}

}  // namespace dqkd
