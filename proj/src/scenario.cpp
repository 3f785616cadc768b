#include "dqkd/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace dqkd {

namespace {

constexpr std::uint64_t kPatStream = 0x9a7;

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty() || !std::isfinite(out))
        throw ScenarioError(std::string(key) + ": expected a finite number, got '" + std::string(v) + "'");
    return out;
}

std::uint64_t parse_count(std::string_view key, std::string_view v) {
    // Accepts integer notation and exact scientific forms such as 1e6.
    const double d = parse_double(key, v);
    if (d < 0.0 || d != std::floor(d) || d > 9.0e15)
        throw ScenarioError(std::string(key) + ": expected a nonnegative integer, got '" + std::string(v) + "'");
    return static_cast<std::uint64_t>(d);
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw ScenarioError(std::string(key) + ": expected true/false, got '" + std::string(v) + "'");
}

using Setter = std::function<void(ScenarioConfig&, std::string_view key, std::string_view value)>;

Setter num(double ScenarioConfig::*field) {
    return [field](ScenarioConfig& c, std::string_view k, std::string_view v) { c.*field = parse_double(k, v); };
}

template <class Section>
Setter num(Section ScenarioConfig::*section, double Section::*field) {
    return [section, field](ScenarioConfig& c, std::string_view k, std::string_view v) {
        (c.*section).*field = parse_double(k, v);
    };
}

template <class Section>
Setter opt(Section ScenarioConfig::*section, std::optional<double> Section::*field) {
    return [section, field](ScenarioConfig& c, std::string_view k, std::string_view v) {
        (c.*section).*field = parse_double(k, v);
    };
}

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"name", [](ScenarioConfig& c, std::string_view, std::string_view v) { c.name = std::string(v); }},
        {"seed", [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.seed = parse_count(k, v); }},
        {"duration_s", num(&ScenarioConfig::duration_s)},
        {"block_duration_s", num(&ScenarioConfig::block_duration_s)},
        {"simulated_pulses",
         [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.simulated_pulses = parse_count(k, v); }},

        {"geometry.horizontal_distance_m", num(&ScenarioConfig::geometry, &Geometry::horizontal_distance_m)},
        {"geometry.altitude_m", num(&ScenarioConfig::geometry, &Geometry::altitude_m)},
        {"geometry.speed_mps", num(&ScenarioConfig::geometry, &Geometry::speed_mps)},
        {"geometry.heading_min_deg", num(&ScenarioConfig::geometry, &Geometry::heading_min_deg)},
        {"geometry.heading_max_deg", num(&ScenarioConfig::geometry, &Geometry::heading_max_deg)},
        {"geometry.travel_m", num(&ScenarioConfig::geometry, &Geometry::travel_m)},

        {"channel.loss_db", num(&ScenarioConfig::channel, &ChannelParams::loss_db)},
        {"channel.excess_noise", num(&ScenarioConfig::channel, &ChannelParams::excess_noise)},
        {"channel.drift_rate", num(&ScenarioConfig::channel, &ChannelParams::drift_rate)},
        {"channel.doppler_residual_hz", num(&ScenarioConfig::channel, &ChannelParams::doppler_residual_hz)},
        {"channel.pulse_rate_hz", num(&ScenarioConfig::channel, &ChannelParams::pulse_rate_hz)},
        {"channel.timing_jitter_s", num(&ScenarioConfig::channel, &ChannelParams::timing_jitter_s)},

        {"receiver.efficiency", num(&ScenarioConfig::receiver, &ReceiverConfig::efficiency)},
        {"receiver.electronic_noise", num(&ScenarioConfig::receiver, &ReceiverConfig::electronic_noise)},
        {"receiver.split_ratio", num(&ScenarioConfig::receiver, &ReceiverConfig::split_ratio)},
        {"receiver.extinction_db", num(&ScenarioConfig::receiver, &ReceiverConfig::extinction_db)},

        {"session.reveal_fraction", num(&ScenarioConfig::session, &SessionConfig::reveal_fraction)},
        {"session.beta", num(&ScenarioConfig::session, &SessionConfig::beta)},
        {"session.eps_pe", num(&ScenarioConfig::session, &SessionConfig::eps_pe)},
        {"session.eps_bar", num(&ScenarioConfig::session, &SessionConfig::eps_bar)},
        {"session.eps_pa", num(&ScenarioConfig::session, &SessionConfig::eps_pa)},
        {"session.v1", num(&ScenarioConfig::session, &SessionConfig::v1)},
        {"session.compensation",
         [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.compensation = parse_bool(k, v); }},
        {"session.compensation_window",
         [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.compensation_window = parse_count(k, v); }},

        {"sync.pattern",
         [](ScenarioConfig& c, std::string_view k, std::string_view v) {
             try {
                 c.sync.pattern = parse_sync_pattern(v);
             } catch (const std::invalid_argument& e) {
                 throw ScenarioError(std::string(k) + ": " + e.what());
             }
         }},
        {"sync.amp_threshold", num(&ScenarioConfig::sync, &SyncConfig::amp_threshold)},
        {"sync.sync_amp", num(&ScenarioConfig::sync, &SyncConfig::sync_amp)},
        {"sync.window_len",
         [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.sync.window_len = parse_count(k, v); }},
        {"sync.scan_points",
         [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.sync.scan_points = parse_count(k, v); }},

        {"pat.enabled", [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.pat.enabled = parse_bool(k, v); }},
        {"pat.terminal", [](ScenarioConfig& c, std::string_view, std::string_view v) { c.pat.terminal = std::string(v); }},
        {"pat.beam_divergence_urad", num(&ScenarioConfig::pat, &PatScenario::beam_divergence_urad)},
        {"pat.fine_loop",
         [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.pat.fine_loop = parse_bool(k, v); }},
        {"pat.sim_duration_s", num(&ScenarioConfig::pat, &PatScenario::sim_duration_s)},
        {"pat.vibration",
         [](ScenarioConfig& c, std::string_view k, std::string_view v) {
             try {
                 c.pat.vibration = parse_vibration(v);
             } catch (const std::invalid_argument& e) {
                 throw ScenarioError(std::string(k) + ": " + e.what());
             }
         }},
        {"pat.white_jitter_urad", num(&ScenarioConfig::pat, &PatScenario::white_jitter_urad)},
        {"pat.initial_error_urad", num(&ScenarioConfig::pat, &PatScenario::initial_error_urad)},

        {"paper_reference.loss_db", opt(&ScenarioConfig::paper, &PaperReference::loss_db)},
        {"paper_reference.transmittance", opt(&ScenarioConfig::paper, &PaperReference::transmittance)},
        {"paper_reference.key_rate_kbps", opt(&ScenarioConfig::paper, &PaperReference::key_rate_kbps)},
    };
    return table;
}

void require(bool ok, const char* key, const std::string& what) {
    if (!ok) throw ScenarioError(std::string(key) + ": " + what);
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

bool same_double(double a, double b) {
    return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

double Geometry::range_m() const { return std::hypot(horizontal_distance_m, altitude_m); }

double Geometry::slew_rate_urad_s() const {
    if (speed_mps <= 0.0) return 0.0;
    return speed_mps / range_m() * 1e6;
}

SyncConfig ScenarioConfig::default_scenario_sync() {
    SyncConfig s;
    s.amp_threshold = 12.0;
    s.sync_amp = 80.0;
    return s;
}

std::size_t ScenarioConfig::block_count() const {
    return static_cast<std::size_t>(std::floor(duration_s / block_duration_s + 1e-9));
}

std::uint64_t ScenarioConfig::block_pulses() const {
    return static_cast<std::uint64_t>(std::llround(channel.pulse_rate_hz * block_duration_s));
}

void ScenarioConfig::validate() const {
    require(!name.empty() && name.find_first_of("/\\ \t") == std::string::npos, "name",
            "must be nonempty without spaces or path separators");
    require(duration_s > 0.0, "duration_s", "must be > 0");
    require(block_duration_s > 0.0, "block_duration_s", "must be > 0");
    require(simulated_pulses >= 10'000, "simulated_pulses", "must be >= 1e4");
    require(simulated_pulses <= UINT32_MAX, "simulated_pulses", "must fit 32-bit pulse indices");

    require(geometry.horizontal_distance_m >= 0.0, "geometry.horizontal_distance_m", "must be >= 0");
    require(geometry.altitude_m >= 0.0, "geometry.altitude_m", "must be >= 0");
    require(geometry.range_m() > 0.0, "geometry.horizontal_distance_m", "link range must be > 0");
    require(geometry.speed_mps >= 0.0, "geometry.speed_mps", "must be >= 0");
    require(geometry.heading_min_deg <= geometry.heading_max_deg, "geometry.heading_min_deg",
            "must not exceed heading_max_deg");
    require(geometry.travel_m >= 0.0, "geometry.travel_m", "must be >= 0");
    if (geometry.speed_mps > 0.0)
        require(geometry.travel_m > 0.0, "geometry.travel_m", "a moving scenario needs a trajectory length");

    auto wrap = [](const char* key, auto&& fn) {
        try {
            fn();
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(std::string(key) + ": " + e.what());
        }
    };
    wrap("channel.loss_db", [&] { channel.validate(); });
    wrap("receiver", [&] { receiver.validate(); });
    wrap("session", [&] {
        SessionConfig s = session;
        s.block_size = block_pulses();
        s.pulse_rate_hz = channel.pulse_rate_hz;
        s.validate();
    });
    require(block_pulses() >= simulated_pulses, "simulated_pulses", "must not exceed pulses per block");
    require(compensation_window >= kMinCompensationPairs, "session.compensation_window", "must be >= 100");
    wrap("sync", [&] { sync.validate(); });

    if (pat.enabled) {
        require(pat.terminal == "ground" || pat.terminal == "drone", "pat.terminal", "must be ground or drone");
        require(pat.beam_divergence_urad > 0.0, "pat.beam_divergence_urad", "must be > 0");
        wrap("pat", [&] { pat_config(*this).validate(); });
    }

    if (paper.loss_db) require(*paper.loss_db >= 0.0, "paper_reference.loss_db", "must be >= 0");
    if (paper.transmittance)
        require(*paper.transmittance > 0.0 && *paper.transmittance <= 1.0, "paper_reference.transmittance",
                "must lie in (0, 1]");
    if (paper.key_rate_kbps) require(*paper.key_rate_kbps >= 0.0, "paper_reference.key_rate_kbps", "must be >= 0");
}

ScenarioConfig parse_scenario(std::string_view text, const std::string& origin) {
    ScenarioConfig cfg;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::string where = origin + ":" + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ScenarioError(where + "expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ScenarioError(where + "unknown key '" + std::string(key) + "'");
        if (!seen.insert(std::string(key)).second)
            throw ScenarioError(where + "key '" + std::string(key) + "' given twice");
        try {
            it->second(cfg, key, value);
        } catch (const ScenarioError& e) {
            throw ScenarioError(where + e.what());
        }
    }
    if (!seen.contains("channel.loss_db")) throw ScenarioError(origin + ": channel.loss_db: required key missing");
    if (!seen.contains("name")) throw ScenarioError(origin + ": name: required key missing");
    try {
        cfg.validate();
    } catch (const ScenarioError& e) {
        throw ScenarioError(origin + ": " + e.what());
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError(path.string() + ": cannot open scenario file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.string());
}

std::filesystem::path bundled_scenario_dir() { return DQKD_SCENARIO_DIR; }

std::vector<std::filesystem::path> list_bundled_scenarios() {
    std::vector<std::filesystem::path> out;
    const auto dir = bundled_scenario_dir();
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".scenario") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

bool BlockRow::operator==(const BlockRow& o) const {
    return block_index == o.block_index && same_double(time_s, o.time_s) && same_double(t_est, o.t_est) &&
           same_double(xi_est, o.xi_est) && same_double(i_ab, o.i_ab) && same_double(chi_be, o.chi_be) &&
           same_double(delta_n, o.delta_n) && same_double(key_rate_bps, o.key_rate_bps) && clamped == o.clamped;
}

std::size_t ScenarioReport::blocks_done() const { return aborts(AbortReason::None); }

std::size_t ScenarioReport::aborts(AbortReason reason) const {
    return static_cast<std::size_t>(std::count(outcomes.begin(), outcomes.end(), reason));
}

PatConfig pat_config(const ScenarioConfig& cfg) {
    PatConfig p;
    p.fine_camera = cfg.pat.terminal == "drone" ? CameraModel::drone_fine() : CameraModel::ground_fine();
    p.fine_loop = cfg.pat.fine_loop;
    p.duration_s = cfg.pat.sim_duration_s;
    p.initial_error_urad = cfg.pat.initial_error_urad;
    p.disturbance.vibration = cfg.pat.vibration;
    p.disturbance.white_jitter_urad = cfg.pat.white_jitter_urad;
    p.disturbance.slew_rate_urad_s = cfg.geometry.slew_rate_urad_s();
    p.disturbance.slew_half_period_s =
        cfg.geometry.speed_mps > 0.0 ? 0.5 * cfg.geometry.travel_m / cfg.geometry.speed_mps : 0.0;
    return p;
}

LinkSetup link_setup(const ScenarioConfig& cfg, bool exact_counts) {
    LinkSetup s;
    s.channel = cfg.channel;
    s.protocol.session = cfg.session;
    s.protocol.session.block_size = cfg.block_pulses();
    s.protocol.session.pulse_rate_hz = cfg.channel.pulse_rate_hz;
    s.protocol.receiver = cfg.receiver;
    s.protocol.compensation = cfg.compensation;
    s.protocol.compensation_window = cfg.compensation_window;
    s.sync = cfg.sync;
    s.modulation = ModulationConfig::with_default_gain(cfg.session.v1);
    s.simulated_pulses = exact_counts ? cfg.block_pulses() : cfg.simulated_pulses;
    s.block_duration_s = cfg.block_duration_s;
    return s;
}

ScenarioReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    ScenarioReport rep;
    rep.name = cfg.name;
    rep.seed = opts.seed.value_or(cfg.seed);
    rep.exact_counts = opts.exact_counts;
    rep.configured_loss_db = cfg.channel.loss_db;
    rep.paper = cfg.paper;
    rep.pat_enabled = cfg.pat.enabled;

    LinkSetup setup = link_setup(cfg, opts.exact_counts);
    if (cfg.pat.enabled) {
        rep.pat = simulate_pat(pat_config(cfg), Rng(mix_seed(rep.seed, kPatStream)));
        // Key exchange runs on the settled tracking loop; without one the
        // whole record stands in.
        std::vector<double> residuals = rep.pat.steady_residuals;
        if (residuals.empty())
            for (const PatSample& s : rep.pat.samples) residuals.push_back(s.residual.norm());
        setup.fade.dt_s = rep.pat.sample_dt_s;
        for (double r : residuals) setup.fade.fade.push_back(pointing_fade(r, cfg.pat.beam_divergence_urad));
        rep.mean_fade = setup.fade.mean();
    }

    ChannelState state;
    const std::size_t blocks = cfg.block_count();
    double total = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        LinkStreams streams = LinkStreams::derive(rep.seed, b);
        const double t0 = static_cast<double>(b) * cfg.block_duration_s;
        const BlockResult r = run_block(setup, state, streams, b, t0);

        BlockRow row;
        row.block_index = b;
        row.time_s = t0;
        row.t_est = nan();
        row.xi_est = nan();
        row.i_ab = nan();
        row.chi_be = nan();
        row.delta_n = nan();
        if (r.estimate) {
            row.t_est = r.estimate->t_hat * r.estimate->t_hat / cfg.receiver.efficiency;
            row.xi_est = r.estimate->xi_hat;
        }
        if (r.report) {
            row.i_ab = r.report->i_ab;
            row.chi_be = r.report->chi_be;
            row.delta_n = r.report->delta_n;
            row.clamped = r.report->clamped;
            if (r.done()) row.key_rate_bps = r.report->key_rate_bps;
        }
        total += row.key_rate_bps;
        rep.blocks.push_back(row);
        rep.outcomes.push_back(r.done() ? AbortReason::None
                                        : (r.reason == AbortReason::None ? AbortReason::Protocol : r.reason));
        rep.saturated += r.saturation.clipped;
        rep.modulated += r.saturation.total;
    }
    rep.mean_key_rate_bps = blocks == 0 ? 0.0 : total / static_cast<double>(blocks);
    return rep;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_blocks_csv(std::ostream& os, const ScenarioReport& report) {
    os << "block_index,time_s,T_est,xi_est,i_ab,chi_be,delta_n,key_rate_bps,clamped\n";
    for (const BlockRow& r : report.blocks) {
        os << r.block_index << ',' << format_double(r.time_s) << ',' << format_double(r.t_est) << ','
           << format_double(r.xi_est) << ',' << format_double(r.i_ab) << ',' << format_double(r.chi_be) << ','
           << format_double(r.delta_n) << ',' << format_double(r.key_rate_bps) << ',' << (r.clamped ? 1 : 0)
           << '\n';
    }
}

std::vector<BlockRow> parse_blocks_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "block_index,time_s,T_est,xi_est,i_ab,chi_be,delta_n,key_rate_bps,clamped")
        throw ScenarioError("blocks csv: unexpected header");
    std::vector<BlockRow> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string_view> f;
        std::string_view rest = line;
        while (true) {
            const auto c = rest.find(',');
            f.push_back(rest.substr(0, c));
            if (c == std::string_view::npos) break;
            rest = rest.substr(c + 1);
        }
        const std::string where = "blocks csv line " + std::to_string(line_no);
        if (f.size() != 9) throw ScenarioError(where + ": expected 9 fields");
        auto d = [&](std::string_view s) {
            if (s == "nan") return nan();
            return parse_double(where, s);
        };
        BlockRow r;
        r.block_index = static_cast<std::size_t>(parse_count(where, f[0]));
        r.time_s = d(f[1]);
        r.t_est = d(f[2]);
        r.xi_est = d(f[3]);
        r.i_ab = d(f[4]);
        r.chi_be = d(f[5]);
        r.delta_n = d(f[6]);
        r.key_rate_bps = d(f[7]);
        if (f[8] != "0" && f[8] != "1") throw ScenarioError(where + ": clamped must be 0 or 1");
        r.clamped = f[8] == "1";
        rows.push_back(r);
    }
    return rows;
}

void write_summary(std::ostream& os, const ScenarioReport& rep) {
    auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
    kv("name", rep.name);
    kv("seed", std::to_string(rep.seed));
    kv("count_mode", rep.exact_counts ? "exact" : "subsampled");
    kv("blocks", std::to_string(rep.blocks.size()));
    kv("blocks_done", std::to_string(rep.blocks_done()));
    for (AbortReason r : {AbortReason::Transport, AbortReason::NoKey, AbortReason::Protocol, AbortReason::Sync,
                          AbortReason::Verification})
        os << "aborts_" << to_string(r) << " = " << rep.aborts(r) << '\n';
    kv("mean_key_rate_bps", format_double(rep.mean_key_rate_bps));
    kv("mean_key_rate_kbps", format_double(rep.mean_key_rate_bps / 1e3));
    kv("configured_loss_db", format_double(rep.configured_loss_db));
    kv("configured_transmittance", format_double(db_to_transmittance(rep.configured_loss_db)));
    double t_sum = 0.0;
    std::size_t t_n = 0;
    for (const BlockRow& b : rep.blocks)
        if (!std::isnan(b.t_est)) {
            t_sum += b.t_est;
            ++t_n;
        }
    kv("mean_T_est", format_double(t_n ? t_sum / static_cast<double>(t_n) : nan()));
    kv("saturation_fraction",
       format_double(rep.modulated ? static_cast<double>(rep.saturated) / static_cast<double>(rep.modulated) : 0.0));
    kv("pat_enabled", rep.pat_enabled ? "true" : "false");
    if (rep.pat_enabled) {
        kv("pat_rms_urad", format_double(rep.pat.stats.rms));
        kv("pat_p95_urad", format_double(rep.pat.stats.p95));
        kv("pat_lock_fraction", format_double(rep.pat.stats.lock_fraction));
        kv("pat_quantum_link", rep.pat.reached_quantum_link ? "true" : "false");
        kv("pat_mean_fade", format_double(rep.mean_fade));
    }
    const auto ref = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("none"); };
    kv("paper_measured_loss_db", ref(rep.paper.loss_db));
    kv("paper_measured_transmittance", ref(rep.paper.transmittance));
    kv("paper_measured_key_rate_kbps", ref(rep.paper.key_rate_kbps));
    os << "# caveat: paper_measured_* are measured reference values, not reproductions. The hardware\n"
          "# noise parameters behind them are unpublished; only the loss enters the simulation.\n";
    if (rep.paper.loss_db && rep.paper.transmittance) {
        const double implied = db_to_transmittance(*rep.paper.loss_db);
        if (std::abs(implied - *rep.paper.transmittance) > 1e-3) {
            os << "# reference discrepancy: loss " << format_double(*rep.paper.loss_db) << " dB implies T = "
               << format_double(std::round(implied * 1e5) / 1e5) << ", but the reference transmittance "
               << format_double(*rep.paper.transmittance) << " corresponds to "
               << format_double(std::round(transmittance_to_db(*rep.paper.transmittance) * 1e3) / 1e3)
               << " dB. Both are kept as reported; the simulation uses the loss.\n";
        }
    }
}

std::vector<std::filesystem::path> emit_report(const ScenarioReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error(out_dir.string() + ": cannot create output directory: " + ec.message());

    std::vector<std::filesystem::path> paths;
    auto write = [&](const std::string& suffix, const std::function<void(std::ostream&)>& body) {
        const auto path = out_dir / (report.name + suffix);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
        body(out);
        out.flush();
        if (!out) throw std::runtime_error(path.string() + ": write failed");
        paths.push_back(path);
    };
    write("_blocks.csv", [&](std::ostream& os) { write_blocks_csv(os, report); });
    write("_pat.csv", [&](std::ostream& os) { write_pat_csv(os, report.pat); });
    write("_summary.txt", [&](std::ostream& os) { write_summary(os, report); });
    return paths;
}

}  // namespace dqkd
