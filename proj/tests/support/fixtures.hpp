#pragma once

#include <unistd.h>

#include <accelhr/ingest.hpp>
#include <accelhr/ppaw.hpp>
#include <accelhr/rng.hpp>
#include <accelhr/synth.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fixtures {

/// Random axis window mixing smooth, noisy, quantized and flat shapes.
inline std::vector<double> random_window(accelhr::Rng& rng, std::size_t len) {
    std::vector<double> w(len);
    const auto kind = rng.below(4);
    const double offset = rng.uniform(-1.5, 1.5);
    const double amp = rng.uniform(0.01, 2.0);
    const double freq = rng.uniform(0.2, 10.0);
    for (std::size_t i = 0; i < len; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(len);
        switch (kind) {
            case 0: w[i] = offset + amp * rng.normal(); break;
            case 1: w[i] = offset + amp * std::sin(2.0 * 3.141592653589793 * freq * t) + 0.01 * rng.normal(); break;
            case 2: w[i] = std::round((offset + amp * rng.normal()) * 10.0) / 10.0; break;  // many exact ties
            default: w[i] = rng.below(5) == 0 ? offset + amp : offset; break;                // mostly flat
        }
    }
    return w;
}

/// The 20-minute scripted stream: x_mean and y_mean carry the signal and
/// agree in rank on the early minutes, so scan order decides ties.
inline std::vector<accelhr::MinuteRecord> scripted_stream() {
    using accelhr::Axis;
    using accelhr::Stat;
    constexpr double xs[20] = {0.10, 0.20, 0.30, 0.40, 0.50, 0.15, 0.35, 0.60, 0.70, 0.25,
                               0.80, 0.90, 0.45, 0.65, 0.05, 0.95, 0.55, 0.75, 0.85, 0.30};
    constexpr double ys[20] = {1.0, 2.0, 3.0, 4.0, 5.0, 1.5, 3.5, 2.0, 7.0, 2.5,
                               8.0, 1.0, 4.5, 6.5, 0.5, 9.5, 5.5, 3.0, 8.5, 6.0};
    constexpr double bpm[20] = {60, 66, 72, 80, 90, 63, 70, 95, 101, 68,
                                112, 118, 86, 99, 58, 125, 92, 100, 121, 74};
    std::vector<accelhr::MinuteRecord> out;
    for (int i = 0; i < 20; ++i) {
        accelhr::MinuteRecord r;
        r.minute_index = 100 + i;
        r.features.set(Axis::x, Stat::mean, xs[i]);
        r.features.set(Axis::y, Stat::mean, ys[i]);
        r.features.set(Axis::z, Stat::mean, 1.0);
        r.bpm = bpm[i];
        out.push_back(r);
    }
    return out;
}

inline accelhr::PpawConfig scripted_config() {
    accelhr::PpawConfig c;
    c.N = 5;
    c.O = 1.0;
    c.T = 5.0;
    c.TTL = 10;
    c.L = 2;
    return c;
}

/// Zero-noise, zero-drift stream with one constant-intensity activity.
struct Frozen {
    bool queried;
    double predicted;
    double variance;
    int err;
    int ttl;
};

// Hand-stepped outcome of scripted_stream() under scripted_config(), minutes 105..119.
inline constexpr Frozen kScripted[15] = {
    {true, 66, 0, 0, 0},         {true, 72, 0, 0, 0},    {true, 76.5, 182.25, 1, 0}, {true, 92.5, 6.25, 2, 0},
    {true, 63, 0, 0, 0},         {false, 101, 0, 0, 0},  {false, 98, 9, 0, 0},       {false, 70, 0, 0, 0},
    {false, 101, 0, 0, 0},       {false, 63, 0, 0, 0},   {false, 101, 0, 0, 0},      {true, 98, 9, 1, 0},
    {true, 98, 9, 0, 0},         {false, 100.5, 0.25, 0, 1}, {false, 68, 0, 0, 0},
};

inline accelhr::SynthConfig stationary_config(std::int64_t minutes) {
    accelhr::SynthConfig c;
    c.n_minutes_per_phase = minutes;
    c.n_phases = 2;
    c.drift_strength = 0.0;
    c.noise_bpm_std = 0.0;
    c.activity_regimes = {{600.0, 600.0, 0.4, 0.4}};
    return c;
}

inline std::vector<accelhr::MinuteRecord> records_of(const accelhr::SynthConfig& cfg) {
    const auto data = accelhr::synth_stream(cfg);
    auto recs = accelhr::align_minutes(data.accel, data.hr, cfg.sample_rate_hz);
    const auto bounds = accelhr::phase_boundaries(cfg);
    accelhr::assign_phases(recs, bounds);
    return recs;
}

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("accelhr-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace fixtures
