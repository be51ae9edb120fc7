#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace accelhr {

enum class Axis : std::size_t { x = 0, y = 1, z = 2 };

// Order matters: it is the column order of the feature matrix CSV.
enum class Stat : std::size_t {
    min = 0,
    max,
    std,
    median,
    mean,
    p25,
    p75,
    iqr,
    skew,
    kurt,
    zc,
    spec_energy,
    spec_entropy,
};

inline constexpr std::size_t kStatsPerAxis = 13;
inline constexpr std::size_t kFeatureCount = 3 * kStatsPerAxis;

/// A minute needs at least this many valid one-second windows.
inline constexpr std::size_t kMinValidSeconds = 30;
inline constexpr std::size_t kMaxSecondsPerMinute = 60;

using AxisStats = std::array<double, kStatsPerAxis>;

/// 39 per-minute (or per-second) accelerometer features, axis-major.
struct FeatureVector {
    std::array<double, kFeatureCount> values{};

    static constexpr std::size_t index(Axis a, Stat s) noexcept {
        return static_cast<std::size_t>(a) * kStatsPerAxis + static_cast<std::size_t>(s);
    }

    double& operator[](std::size_t i) noexcept { return values[i]; }
    double operator[](std::size_t i) const noexcept { return values[i]; }

    double get(Axis a, Stat s) const noexcept { return values[index(a, s)]; }
    void set(Axis a, Stat s, double v) noexcept { values[index(a, s)] = v; }

    void set_axis(Axis a, const AxisStats& stats) noexcept;
    AxisStats axis(Axis a) const noexcept;

    bool all_finite() const noexcept;

    /// Column names, e.g. "x_min", ..., "z_spec_entropy".
    static const std::array<std::string, kFeatureCount>& names();

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

std::string_view stat_name(Stat s) noexcept;

/// Throws ShapeError unless the window has >= 2 samples, all finite.
void validate_window(std::span<const double> w);

/// Sign changes of the mean-centered window. Exact zeros are skipped: a
/// change is counted against the most recent nonzero sample.
std::size_t zero_crossings(std::span<const double> w);

/// (1/M) * sum |X_k|^2 over the full DFT of the raw window.
double spectral_energy(std::span<const double> w);

/// Shannon entropy (nats) of the normalized one-sided power spectrum,
/// bins 0..floor(M/2), DC included. Zero when total power < 1e-12.
double spectral_entropy(std::span<const double> w);

/// All 13 statistics of one axis window.
AxisStats axis_features(std::span<const double> w);

/// Features of one one-second window. Axes must have equal length.
FeatureVector window_features(std::span<const double> x, std::span<const double> y,
                              std::span<const double> z);

/// Field-wise arithmetic mean of per-second vectors. Fewer than
/// `min_seconds` throws InsufficientDataError, more than 60 ShapeError.
FeatureVector minute_aggregate(std::span<const FeatureVector> seconds,
                               std::size_t min_seconds = kMinValidSeconds);

}  // namespace accelhr
