#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "accelhr/ingest.hpp"

namespace accelhr {

/// One kind of activity bout: each bout draws a duration (seconds) and a
/// constant intensity uniformly from these ranges.
struct ActivityRegime {
    double min_duration_s = 60.0;
    double max_duration_s = 60.0;
    double min_intensity = 0.0;
    double max_intensity = 0.0;

    friend bool operator==(const ActivityRegime&, const ActivityRegime&) = default;
};

/// Rest, walk and exercise bouts.
std::vector<ActivityRegime> default_regimes();

struct SynthConfig {
    std::int64_t n_minutes_per_phase = 1440;
    int n_phases = 2;
    int sample_rate_hz = 50;
    std::uint64_t seed = 42;
    double drift_strength = 15.0;
    double noise_bpm_std = 2.0;
    std::vector<ActivityRegime> activity_regimes = default_regimes();

    /// Throws ConfigError.
    void validate() const;

    friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

struct SynthData {
    std::vector<AccelSample> accel;
    std::vector<HrSample> hr;
};

/// Streams the synthetic dataset in time order: all accel samples of a
/// minute are delivered before that minute's heart rate.
///
/// Phases are laid end to end in minute indices and replay the same
/// activity schedule; what changes from phase p to p+1 is the heart-rate
/// response: resting rate +drift_strength and activity gain
/// +drift_strength/2 per phase. Heart rate follows a 30 s and a 300 s
/// exponential moving average of activity intensity, plus Gaussian noise
/// per minute.
void synth_visit(const SynthConfig& cfg, const std::function<void(const AccelSample&)>& on_accel,
                 const std::function<void(const HrSample&)>& on_hr);

SynthData synth_stream(const SynthConfig& cfg);

/// [0, n, 2n, ..., n_phases*n]
std::vector<std::int64_t> phase_boundaries(const SynthConfig& cfg);

struct DatasetManifest {
    SynthConfig config;
    std::string accel_file;
    std::string hr_file;
    std::vector<std::int64_t> phase_boundaries;
    /// Directory the relative file names resolve against (not serialized).
    std::filesystem::path base_dir;

    std::filesystem::path accel_path() const { return base_dir / accel_file; }
    std::filesystem::path hr_path() const { return base_dir / hr_file; }
};

nlohmann::ordered_json synth_config_to_json(const SynthConfig& c);
/// Missing keys keep their defaults; wrong types throw ConfigError.
SynthConfig synth_config_from_json(const nlohmann::json& j);

std::string manifest_to_string(const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Writes accel.csv, hr.csv and manifest.json into `dir` (created if needed).
DatasetManifest write_synth_dataset(const SynthConfig& cfg, const std::filesystem::path& dir);

/// Streams a manifest's CSVs through feature extraction and returns the
/// aligned, phase-labeled minute records.
std::vector<MinuteRecord> load_minutes(const DatasetManifest& m);

}  // namespace accelhr
