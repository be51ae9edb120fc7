#include <doctest.h>

#include <accelhr/error.hpp>
#include <accelhr/features.hpp>
#include <accelhr/ingest.hpp>
#include <accelhr/synth.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

using namespace accelhr;

TEST_CASE("accel csv parses the basic example") {
    const auto s = parse_accel_csv(std::string_view("t_ms,x,y,z\n0,0.0,0.0,1.0\n20,0.1,0.0,1.0"));
    REQUIRE(s.size() == 2);
    CHECK(s[1].t_ms == 20);
    CHECK(s[1].x == 0.1);
    CHECK(s[0].z == 1.0);
}

TEST_CASE("accel csv errors carry the line number") {
    try {
        parse_accel_csv(std::string_view("t_ms,x,y,z\n0,a,0,0"));
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.category() == "parse");
    }
    CHECK_THROWS_AS(parse_accel_csv(std::string_view("t_ms,x,y\n0,0,0")), ParseError);
    CHECK_THROWS_AS(parse_accel_csv(std::string_view("t_ms,x,y,z\n0,0,0")), ParseError);
    CHECK_THROWS_AS(parse_accel_csv(std::string_view("t_ms,x,y,z\n0,0,0,0,0")), ParseError);
    CHECK_THROWS_AS(parse_accel_csv(std::string_view("t_ms,x,y,z\n0,nan,0,0")), ParseError);
    CHECK_THROWS_AS(parse_accel_csv(std::string_view("t_ms,x,y,z\n-5,0,0,0")), ParseError);
    try {
        parse_accel_csv(std::string_view("t_ms,x,y,z\n0,0,0,1\n40,0,0,1\n40,0,0,1\n"));
        FAIL("expected an ordering error");
    } catch (const OrderingError& e) {
        CHECK(e.line() == 4);
    }
}

TEST_CASE("accel csv tolerates CRLF") {
    const auto s = parse_accel_csv(std::string_view("t_ms,x,y,z\r\n0,1,2,3\r\n"));
    REQUIRE(s.size() == 1);
    CHECK(s[0].z == 3.0);
}

TEST_CASE("hr csv") {
    const auto h = parse_hr_csv(std::string_view("minute_index,bpm\n0,62.0\n1,64.5"));
    REQUIRE(h.size() == 2);
    CHECK(h[1].bpm == 64.5);
    CHECK_THROWS_AS(parse_hr_csv(std::string_view("minute_index,bpm\n0,300")), RangeError);
    CHECK_THROWS_AS(parse_hr_csv(std::string_view("minute_index,bpm\n0,19.9")), RangeError);
    CHECK_THROWS_AS(parse_hr_csv(std::string_view("minute_index,bpm\n3,60\n3,61")), OrderingError);
    CHECK_THROWS_AS(parse_hr_csv(std::string_view("minute,bpm\n3,60")), ParseError);
    CHECK_THROWS_AS(parse_hr_csv(std::string_view("minute_index,bpm\n1.5,60")), ParseError);
}

TEST_CASE("synthetic data survives a csv roundtrip") {
    SynthConfig cfg;
    cfg.n_minutes_per_phase = 2;
    cfg.n_phases = 2;
    cfg.seed = 3;
    const auto data = synth_stream(cfg);
    REQUIRE(data.accel.size() >= 1000);

    std::vector<AccelSample> first(data.accel.begin(), data.accel.begin() + 1000);
    std::ostringstream a;
    write_accel_csv(a, first);
    CHECK(parse_accel_csv(std::string_view(a.str())) == first);

    std::ostringstream h;
    write_hr_csv(h, data.hr);
    CHECK(parse_hr_csv(std::string_view(h.str())) == data.hr);
}

TEST_CASE("synth is deterministic and seed-sensitive") {
    SynthConfig cfg;
    cfg.n_minutes_per_phase = 3;
    const auto a = synth_stream(cfg);
    const auto b = synth_stream(cfg);
    CHECK(a.accel == b.accel);
    CHECK(a.hr == b.hr);
    cfg.seed = 43;
    CHECK(synth_stream(cfg).accel != a.accel);
}

TEST_CASE("synth config validation") {
    SynthConfig cfg;
    cfg.n_minutes_per_phase = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.n_phases = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.sample_rate_hz = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.drift_strength = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.noise_bpm_std = -0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.activity_regimes.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("zero noise, zero drift, one constant regime gives a constant heart rate") {
    auto cfg = fixtures::stationary_config(20);
    cfg.n_phases = 3;
    const auto data = synth_stream(cfg);
    REQUIRE(data.hr.size() == 60);
    for (const auto& h : data.hr) CHECK(h.bpm == data.hr.front().bpm);
}

namespace {

std::vector<double> phase_means(const SynthData& d, std::int64_t per_phase, int phases) {
    std::vector<double> sum(static_cast<std::size_t>(phases), 0.0);
    std::vector<double> n(static_cast<std::size_t>(phases), 0.0);
    for (const auto& h : d.hr) {
        const auto p = static_cast<std::size_t>(h.minute_index / per_phase);
        sum[p] += h.bpm;
        n[p] += 1.0;
    }
    for (std::size_t p = 0; p < sum.size(); ++p) sum[p] /= n[p];
    return sum;
}

}  // namespace

TEST_CASE("drift shifts the heart-rate distribution between phases") {
    SynthConfig cfg;
    cfg.n_minutes_per_phase = 240;
    cfg.drift_strength = 10;
    const auto m = phase_means(synth_stream(cfg), 240, 2);
    CHECK(m[1] - m[0] >= 10.0);
}

TEST_CASE("without drift the phase means agree within the noise") {
    SynthConfig cfg;
    cfg.n_minutes_per_phase = 240;
    cfg.drift_strength = 0;
    cfg.noise_bpm_std = 2.0;
    const auto m = phase_means(synth_stream(cfg), 240, 2);
    // phases replay the same activity schedule, so only the per-minute noise
    // differs; 4 sigma of the difference of two means
    CHECK(std::abs(m[1] - m[0]) <= 4.0 * std::sqrt(2.0) * cfg.noise_bpm_std / std::sqrt(240.0));
}

TEST_CASE("one minute of accel plus its heart rate aligns to one record") {
    std::vector<AccelSample> accel;
    for (std::int64_t t = 0; t < 60'000; t += 20) {
        accel.push_back({t, std::sin(static_cast<double>(t) / 300.0), 0.0, 1.0});
    }
    const std::vector<HrSample> hr{{0, 70.0}};
    const auto recs = align_minutes(accel, hr, 50);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].minute_index == 0);
    CHECK(recs[0].bpm == 70.0);
}

TEST_CASE("alignment drops uncovered minutes and never fabricates") {
    std::vector<AccelSample> accel;
    for (std::int64_t t = 0; t < 120'000; t += 20) accel.push_back({t, 0.1 * static_cast<double>(t % 7), 0.0, 1.0});
    const std::vector<HrSample> only_late{{5, 80.0}};
    CHECK_THROWS_AS(align_minutes(accel, only_late, 50), AlignmentError);

    const std::vector<HrSample> hr{{1, 75.0}, {5, 80.0}};
    const auto recs = align_minutes(accel, hr, 50);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].minute_index == 1);
}

TEST_CASE("a minute with fewer than 30 valid seconds is dropped") {
    std::vector<AccelSample> accel;
    for (std::int64_t t = 0; t < 29'000; t += 20) accel.push_back({t, 0.0, 0.0, 1.0});
    // a second with too few samples (needs 25 at 50 Hz) does not count
    for (std::int64_t t = 29'000; t < 29'480; t += 20) accel.push_back({t, 0.0, 0.0, 1.0});
    const std::vector<HrSample> hr{{0, 70.0}};
    CHECK_THROWS_AS(align_minutes(accel, hr, 50), AlignmentError);

    for (std::int64_t t = 30'000; t < 31'000; t += 20) accel.push_back({t, 0.0, 0.0, 1.0});
    CHECK(align_minutes(accel, hr, 50).size() == 1);
}

TEST_CASE("aligned features equal the per-window oracle") {
    SynthConfig cfg;
    cfg.n_minutes_per_phase = 3;
    cfg.n_phases = 1;
    cfg.seed = 17;
    const auto data = synth_stream(cfg);
    const auto recs = align_minutes(data.accel, data.hr, cfg.sample_rate_hz);
    REQUIRE(recs.size() == 3);
    for (const auto& r : recs) {
        std::vector<FeatureVector> secs;
        for (std::int64_t s = 0; s < 60; ++s) {
            const std::int64_t lo = r.minute_index * 60'000 + s * 1000;
            std::vector<double> x, y, z;
            for (const auto& a : data.accel) {
                if (a.t_ms >= lo && a.t_ms < lo + 1000) {
                    x.push_back(a.x);
                    y.push_back(a.y);
                    z.push_back(a.z);
                }
            }
            if (x.size() >= 25) secs.push_back(oracle::window(x, y, z));
        }
        FeatureVector want;
        for (const auto& s : secs) {
            for (std::size_t i = 0; i < kFeatureCount; ++i) want[i] += s[i] / static_cast<double>(secs.size());
        }
        for (std::size_t i = 0; i < kFeatureCount; ++i) CHECK(oracle::close(r.features[i], want[i], 1e-9));
    }
}

TEST_CASE("phases are assigned from boundaries") {
    std::vector<MinuteRecord> recs(4);
    recs[0].minute_index = 0;
    recs[1].minute_index = 9;
    recs[2].minute_index = 10;
    recs[3].minute_index = 19;
    const std::vector<std::int64_t> b{0, 10, 20};
    assign_phases(recs, b);
    CHECK(recs[0].phase == 0);
    CHECK(recs[1].phase == 0);
    CHECK(recs[2].phase == 1);
    CHECK(recs[3].phase == 1);
    recs[3].minute_index = 20;
    CHECK_THROWS_AS(assign_phases(recs, b), RangeError);
}

TEST_CASE("feature csv roundtrip") {
    SynthConfig cfg;
    cfg.n_minutes_per_phase = 2;
    auto recs = fixtures::records_of(cfg);
    recs[1].bpm.reset();
    std::ostringstream out;
    write_feature_csv(out, recs);
    const auto header = out.str().substr(0, out.str().find('\n'));
    CHECK(header.rfind("minute_index,phase,bpm,x_min,x_max", 0) == 0);
    std::istringstream in(out.str());
    CHECK(parse_feature_csv(in) == recs);
}

TEST_CASE("dataset on disk reloads to the same records") {
    fixtures::TempDir dir("ingest");
    SynthConfig cfg;
    cfg.n_minutes_per_phase = 3;
    const auto manifest = write_synth_dataset(cfg, dir.path());
    const auto j = nlohmann::json::parse(fixtures::slurp(dir / "manifest.json"));
    CHECK(j.at("accel_file") == "accel.csv");
    CHECK(j.at("hr_file") == "hr.csv");
    CHECK(j.at("phase_boundaries") == nlohmann::json::array({0, 3, 6}));
    CHECK(j.at("config").at("seed") == 42);

    const auto back = read_manifest(dir / "manifest.json");
    CHECK(back.config == cfg);
    CHECK(load_minutes(back) == fixtures::records_of(cfg));
}
