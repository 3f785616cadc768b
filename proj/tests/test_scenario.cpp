#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dqkd/scenario.hpp"

using namespace dqkd;

namespace {

const char* kMinimal = "name = tiny\nchannel.loss_db = 1.0\n";

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string error_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ScenarioError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("bundled hover_75m carries its reference numbers") {
    const ScenarioConfig cfg = load_scenario(bundled_scenario_dir() / "hover_75m.scenario");
    CHECK(cfg.name == "hover_75m");
    CHECK(cfg.channel.loss_db == 0.741);
    REQUIRE(cfg.paper.key_rate_kbps.has_value());
    CHECK(*cfg.paper.key_rate_kbps == 79.48);
}

TEST_CASE("negative loss is rejected naming the key") {
    const std::string err = error_of("name = bad\nchannel.loss_db = -1\n");
    REQUIRE_FALSE(err.empty());
    CHECK(err.find("channel.loss_db") != std::string::npos);
}

TEST_CASE("omitted receiver block takes the defaults") {
    const ScenarioConfig cfg = parse_scenario(kMinimal);
    CHECK(cfg.receiver.efficiency == 0.55);
    CHECK(cfg.receiver.electronic_noise == 0.10);
    CHECK(cfg.sync.amp_threshold == 12.0);
}

TEST_CASE("unknown, repeated, missing and malformed keys are rejected") {
    CHECK(error_of(std::string(kMinimal) + "channel.colour = red\n").find("channel.colour") != std::string::npos);
    CHECK(error_of(std::string(kMinimal) + "channel.loss_db = 2\n").find("given twice") != std::string::npos);
    CHECK(error_of("name = x\n").find("channel.loss_db") != std::string::npos);
    CHECK(error_of(std::string(kMinimal) + "seed\n").find("key = value") != std::string::npos);
    CHECK(error_of(std::string(kMinimal) + "session.beta = 1.5\n").find("session") != std::string::npos);
    CHECK(error_of(std::string(kMinimal) + "pat.terminal = roof\n").find("pat.terminal") != std::string::npos);
    CHECK_THROWS_AS(load_scenario("/nonexistent/x.scenario"), ScenarioError);
}

TEST_CASE("comments and whitespace are ignored") {
    const ScenarioConfig cfg = parse_scenario("# header\n  name = spaced   # trailing\n\nchannel.loss_db=2.5\n");
    CHECK(cfg.name == "spaced");
    CHECK(cfg.channel.loss_db == 2.5);
}

TEST_CASE("blocks CSV round trip") {
    ScenarioReport rep;
    rep.name = "rt";
    rep.blocks.push_back({0, 10.0, 0.41, 0.0213, 1.1, 0.7, 0.004, 1.5e6, false});
    rep.blocks.push_back({1, 20.0, std::nan(""), std::nan(""), 0.0, 0.0, 0.0, 0.0, true});
    rep.blocks.push_back({2, 30.0, 0.1 + 0.2, 1.0 / 3.0, 5e-324, 1e300, 0.1, 123.456, false});
    std::stringstream ss;
    write_blocks_csv(ss, rep);
    const std::string text = ss.str();
    const auto back = parse_blocks_csv(ss);
    CHECK(back == rep.blocks);
    std::stringstream again;
    ScenarioReport rep2 = rep;
    rep2.blocks = back;
    write_blocks_csv(again, rep2);
    CHECK(again.str() == text);

    std::stringstream bad("block_index,time_s\n");
    CHECK_THROWS_AS(parse_blocks_csv(bad), ScenarioError);
}

TEST_CASE("an empty report still emits a summary") {
    ScenarioReport rep;
    rep.name = "empty";
    const auto dir = std::filesystem::temp_directory_path() / "dqkd_test_empty_report";
    std::filesystem::remove_all(dir);
    const auto paths = emit_report(rep, dir);
    REQUIRE(paths.size() == 3);
    const std::string summary = read_file(dir / "empty_summary.txt");
    CHECK(summary.find("blocks = 0\n") != std::string::npos);
    std::ifstream csv(dir / "empty_blocks.csv");
    CHECK(parse_blocks_csv(csv).empty());
    std::filesystem::remove_all(dir);
}

TEST_CASE("km_1p2 summary carries the measured reference and the dB discrepancy") {
    const ScenarioConfig cfg = load_scenario(bundled_scenario_dir() / "km_1p2.scenario");
    ScenarioReport rep;
    rep.name = cfg.name;
    rep.configured_loss_db = cfg.channel.loss_db;
    rep.paper = cfg.paper;
    std::ostringstream ss;
    write_summary(ss, rep);
    const std::string s = ss.str();
    CHECK(s.find("paper_measured_key_rate_kbps = 2.76\n") != std::string::npos);
    CHECK(s.find("not reproductions") != std::string::npos);
    if (cfg.paper.transmittance) CHECK(s.find("reference discrepancy") != std::string::npos);
}

TEST_CASE("exactly eight bundled fixtures, all valid with references") {
    const auto files = list_bundled_scenarios();
    CHECK(files.size() == 8);
    for (const auto& f : files) {
        const ScenarioConfig cfg = load_scenario(f);
        CHECK(cfg.name == f.stem().string());
        CHECK(cfg.paper.key_rate_kbps.has_value());
        CHECK(cfg.paper.loss_db.has_value());
    }
}

TEST_CASE("format_double is shortest round-trip") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e6) == "1e+06");
    CHECK(format_double(1234.5) == "1234.5");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("a short seeded run is deterministic") {
    ScenarioConfig cfg = parse_scenario(
        "name = short\nchannel.loss_db = 1.0\nduration_s = 2\nblock_duration_s = 1\n"
        "simulated_pulses = 1e5\npat.sim_duration_s = 1\n");
    const ScenarioReport a = run_scenario(cfg);
    const ScenarioReport b = run_scenario(cfg);
    REQUIRE(a.blocks.size() == 2);
    CHECK(a.blocks == b.blocks);
    std::ostringstream sa, sb;
    write_summary(sa, a);
    write_summary(sb, b);
    CHECK(sa.str() == sb.str());
    const ScenarioReport c = run_scenario(cfg, RunOptions{7, false});
    CHECK(c.seed == 7);
}

TEST_CASE("slew rate from geometry") {
    Geometry g;
    g.horizontal_distance_m = 100.0;
    g.speed_mps = 1.0;
    CHECK(g.slew_rate_urad_s() == doctest::Approx(1e4));
    g.speed_mps = 0.0;
    CHECK(g.slew_rate_urad_s() == 0.0);
}

}
