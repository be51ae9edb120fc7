#include "accelhr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "accelhr/error.hpp"
#include "accelhr/rng.hpp"

namespace accelhr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Heart-rate response, phase 0.
constexpr double kRestBpm = 60.0;
constexpr double kActivityGain = 50.0;
constexpr double kRecoveryGain = 10.0;
constexpr double kFastTauS = 30.0;
constexpr double kSlowTauS = 300.0;

// Accelerometer model.
constexpr double kSensorNoiseG = 0.01;
constexpr double kStepsPerG = 1e4;

constexpr std::uint64_t kActivityStream = 0xAC71;
constexpr std::uint64_t kSensorStream = 0x5E45;
constexpr std::uint64_t kHrStream = 0x4872;

double quantize(double g) { return std::round(g * kStepsPerG) / kStepsPerG; }

double round_bpm(double bpm) { return std::round(bpm * 10.0) / 10.0; }

class ActivitySchedule {
public:
    ActivitySchedule(const std::vector<ActivityRegime>& regimes, std::uint64_t seed)
        : regimes_(regimes), rng_(mix_seed({seed, kActivityStream})) {}

    double next_second() {
        if (remaining_ == 0) start_bout();
        --remaining_;
        return intensity_;
    }

private:
    void start_bout() {
        const auto& r = regimes_[rng_.below(regimes_.size())];
        const double d = rng_.uniform(r.min_duration_s, r.max_duration_s);
        remaining_ = std::max<std::int64_t>(1, std::llround(d));
        intensity_ = rng_.uniform(r.min_intensity, r.max_intensity);
    }

    const std::vector<ActivityRegime>& regimes_;
    Rng rng_;
    std::int64_t remaining_ = 0;
    double intensity_ = 0.0;
};

}  // namespace

std::vector<ActivityRegime> default_regimes() {
    return {
        {300.0, 2400.0, 0.0, 0.1},  // rest
        {60.0, 600.0, 0.3, 0.6},    // walk
        {60.0, 900.0, 0.7, 1.0},    // exercise
    };
}

void SynthConfig::validate() const {
    if (n_minutes_per_phase < 1) throw ConfigError("n_minutes_per_phase must be >= 1");
    if (n_phases < 1) throw ConfigError("n_phases must be >= 1");
    if (sample_rate_hz < 2 || sample_rate_hz > 1000) throw ConfigError("sample_rate_hz must be in [2, 1000]");
    if (!(drift_strength >= 0.0) || !std::isfinite(drift_strength)) throw ConfigError("drift_strength must be >= 0");
    if (!(noise_bpm_std >= 0.0) || !std::isfinite(noise_bpm_std)) throw ConfigError("noise_bpm_std must be >= 0");
    if (activity_regimes.empty()) throw ConfigError("at least one activity regime is required");
    for (const auto& r : activity_regimes) {
        if (!(r.min_duration_s >= 1.0) || r.max_duration_s < r.min_duration_s || !std::isfinite(r.max_duration_s)) {
            throw ConfigError("regime durations must satisfy 1 <= min <= max");
        }
        if (!(r.min_intensity >= 0.0) || r.max_intensity < r.min_intensity || !std::isfinite(r.max_intensity)) {
            throw ConfigError("regime intensities must satisfy 0 <= min <= max");
        }
    }
}

std::vector<std::int64_t> phase_boundaries(const SynthConfig& cfg) {
    std::vector<std::int64_t> out;
    for (int p = 0; p <= cfg.n_phases; ++p) out.push_back(p * cfg.n_minutes_per_phase);
    return out;
}

void synth_visit(const SynthConfig& cfg, const std::function<void(const AccelSample&)>& on_accel,
                 const std::function<void(const HrSample&)>& on_hr) {
    cfg.validate();
    const int rate = cfg.sample_rate_hz;
    const double fast_alpha = 1.0 - std::exp(-1.0 / kFastTauS);
    const double slow_alpha = 1.0 - std::exp(-1.0 / kSlowTauS);

    for (int p = 0; p < cfg.n_phases; ++p) {
        ActivitySchedule schedule(cfg.activity_regimes, cfg.seed);
        Rng sensor(mix_seed({cfg.seed, kSensorStream, static_cast<std::uint64_t>(p)}));
        Rng hr_noise(mix_seed({cfg.seed, kHrStream, static_cast<std::uint64_t>(p)}));

        const double rest_bpm = kRestBpm + cfg.drift_strength * p;
        const double gain = kActivityGain + 0.5 * cfg.drift_strength * p;
        double fast = 0.0, slow = 0.0, angle = 0.0;
        bool first = true;

        for (std::int64_t local_minute = 0; local_minute < cfg.n_minutes_per_phase; ++local_minute) {
            const std::int64_t minute = p * cfg.n_minutes_per_phase + local_minute;
            double bpm_sum = 0.0;
            for (int sec = 0; sec < 60; ++sec) {
                const double intensity = schedule.next_second();
                if (first) {
                    fast = slow = intensity;
                    first = false;
                } else {
                    fast += fast_alpha * (intensity - fast);
                    slow += slow_alpha * (intensity - slow);
                }
                bpm_sum += rest_bpm + gain * fast + kRecoveryGain * slow;

                const double freq = 0.3 + 2.2 * intensity;
                const double amp = 0.9 * intensity;
                const std::int64_t second_ms = (minute * 60 + sec) * kMillisPerSecond;
                for (int j = 0; j < rate; ++j) {
                    AccelSample s;
                    s.t_ms = second_ms + (static_cast<std::int64_t>(j) * kMillisPerSecond) / rate;
                    s.x = quantize(amp * std::sin(angle) + kSensorNoiseG * sensor.normal());
                    s.y = quantize(0.6 * amp * std::sin(angle + 1.1) + kSensorNoiseG * sensor.normal());
                    s.z = quantize(1.0 + 0.5 * amp * std::sin(2.0 * angle) + kSensorNoiseG * sensor.normal());
                    on_accel(s);
                    angle = std::fmod(angle + kTwoPi * freq / rate, kTwoPi);
                }
            }
            const double noise = cfg.noise_bpm_std > 0.0 ? cfg.noise_bpm_std * hr_noise.normal() : 0.0;
            const double bpm = std::clamp(round_bpm(bpm_sum / 60.0 + noise), kMinBpm, kMaxBpm);
            on_hr(HrSample{minute, bpm});
        }
    }
}

SynthData synth_stream(const SynthConfig& cfg) {
    SynthData out;
    synth_visit(
        cfg, [&out](const AccelSample& s) { out.accel.push_back(s); },
        [&out](const HrSample& h) { out.hr.push_back(h); });
    return out;
}

// --- manifest --------------------------------------------------------------------

nlohmann::ordered_json synth_config_to_json(const SynthConfig& c) {
    nlohmann::ordered_json regimes = nlohmann::ordered_json::array();
    for (const auto& r : c.activity_regimes) {
        regimes.push_back({{"min_duration_s", r.min_duration_s},
                           {"max_duration_s", r.max_duration_s},
                           {"min_intensity", r.min_intensity},
                           {"max_intensity", r.max_intensity}});
    }
    nlohmann::ordered_json j;
    j["n_minutes_per_phase"] = c.n_minutes_per_phase;
    j["n_phases"] = c.n_phases;
    j["sample_rate_hz"] = c.sample_rate_hz;
    j["seed"] = c.seed;
    j["drift_strength"] = c.drift_strength;
    j["noise_bpm_std"] = c.noise_bpm_std;
    j["activity_regimes"] = std::move(regimes);
    return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
    SynthConfig c;
    try {
        c.n_minutes_per_phase = j.value("n_minutes_per_phase", c.n_minutes_per_phase);
        c.n_phases = j.value("n_phases", c.n_phases);
        c.sample_rate_hz = j.value("sample_rate_hz", c.sample_rate_hz);
        c.seed = j.value("seed", c.seed);
        c.drift_strength = j.value("drift_strength", c.drift_strength);
        c.noise_bpm_std = j.value("noise_bpm_std", c.noise_bpm_std);
        if (j.contains("activity_regimes")) {
            c.activity_regimes.clear();
            for (const auto& r : j.at("activity_regimes")) {
                c.activity_regimes.push_back({r.at("min_duration_s").get<double>(), r.at("max_duration_s").get<double>(),
                                              r.at("min_intensity").get<double>(), r.at("max_intensity").get<double>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synthetic config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string manifest_to_string(const DatasetManifest& m) {
    nlohmann::ordered_json j;
    j["config"] = synth_config_to_json(m.config);
    j["accel_file"] = m.accel_file;
    j["hr_file"] = m.hr_file;
    j["phase_boundaries"] = m.phase_boundaries;
    return j.dump(2) + "\n";
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    DatasetManifest m;
    try {
        const auto j = nlohmann::json::parse(in);
        m.config = synth_config_from_json(j.at("config"));
        m.accel_file = j.at("accel_file").get<std::string>();
        m.hr_file = j.at("hr_file").get<std::string>();
        m.phase_boundaries = j.at("phase_boundaries").get<std::vector<std::int64_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest " + path.string() + ": " + e.what());
    }
    if (m.phase_boundaries.size() < 2 || !std::is_sorted(m.phase_boundaries.begin(), m.phase_boundaries.end())) {
        throw ConfigError("manifest phase_boundaries must be an increasing list of >= 2 minutes");
    }
    m.base_dir = path.parent_path();
    return m;
}

DatasetManifest write_synth_dataset(const SynthConfig& cfg, const std::filesystem::path& dir) {
    cfg.validate();
    std::filesystem::create_directories(dir);
    DatasetManifest m;
    m.config = cfg;
    m.accel_file = "accel.csv";
    m.hr_file = "hr.csv";
    m.phase_boundaries = phase_boundaries(cfg);
    m.base_dir = dir;

    std::ofstream accel_out(m.accel_path(), std::ios::binary);
    if (!accel_out) throw IoError("cannot write " + m.accel_path().string());
    std::vector<HrSample> hr;
    {
        AccelCsvWriter writer(accel_out);
        synth_visit(
            cfg, [&writer](const AccelSample& s) { writer.write(s); },
            [&hr](const HrSample& h) { hr.push_back(h); });
        writer.flush();
    }
    std::ofstream hr_out(m.hr_path(), std::ios::binary);
    if (!hr_out) throw IoError("cannot write " + m.hr_path().string());
    write_hr_csv(hr_out, hr);

    std::ofstream manifest_out(dir / "manifest.json", std::ios::binary);
    if (!manifest_out) throw IoError("cannot write manifest");
    manifest_out << manifest_to_string(m);
    if (!manifest_out) throw IoError("manifest write failed");
    return m;
}

std::vector<MinuteRecord> load_minutes(const DatasetManifest& m) {
    std::ifstream accel_in(m.accel_path(), std::ios::binary);
    if (!accel_in) throw IoError("cannot open " + m.accel_path().string());
    std::ifstream hr_in(m.hr_path(), std::ios::binary);
    if (!hr_in) throw IoError("cannot open " + m.hr_path().string());

    const auto hr = parse_hr_csv(hr_in);
    std::vector<std::pair<std::int64_t, FeatureVector>> minutes;
    MinuteFeatureBuilder builder(m.config.sample_rate_hz, [&minutes](std::int64_t idx, const FeatureVector& fv) {
        minutes.emplace_back(idx, fv);
    });
    AccelCsvReader reader(accel_in);
    AccelSample s;
    while (reader.next(s)) builder.push(s);
    builder.finish();

    auto records = join_minutes(minutes, hr);
    if (records.empty()) throw AlignmentError("no minute has both heart rate and enough acceleration data");
    assign_phases(records, m.phase_boundaries);
    return records;
}

}  // namespace accelhr
