#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "accelhr/features.hpp"

namespace accelhr {

inline constexpr std::int64_t kMillisPerMinute = 60'000;
inline constexpr std::int64_t kMillisPerSecond = 1'000;
inline constexpr double kMinBpm = 20.0;
inline constexpr double kMaxBpm = 250.0;

/// One tri-axial reading; acceleration in g.
struct AccelSample {
    std::int64_t t_ms = 0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const AccelSample&, const AccelSample&) = default;
};

/// Heart rate reported for one minute.
struct HrSample {
    std::int64_t minute_index = 0;
    double bpm = 0.0;

    friend bool operator==(const HrSample&, const HrSample&) = default;
};

/// Time-aligned (features, label, phase) unit of the minute stream.
struct MinuteRecord {
    std::int64_t minute_index = 0;
    FeatureVector features;
    std::optional<double> bpm;
    int phase = 0;

    friend bool operator==(const MinuteRecord&, const MinuteRecord&) = default;
};

constexpr bool bpm_in_range(double bpm) noexcept { return bpm >= kMinBpm && bpm <= kMaxBpm; }

constexpr std::int64_t minute_of(std::int64_t t_ms) noexcept { return t_ms / kMillisPerMinute; }

/// Samples a one-second window needs to count as valid: max(2, ceil(rate / 2)).
constexpr std::size_t min_samples_per_second(int sample_rate_hz) noexcept {
    const auto half = (static_cast<std::size_t>(sample_rate_hz) + 1) / 2;
    return half < 2 ? 2 : half;
}

// --- CSV -------------------------------------------------------------------

/// Pull-style reader over an accel CSV stream; validates header, arity,
/// numeric fields, finiteness and strictly increasing timestamps.
class AccelCsvReader {
public:
    explicit AccelCsvReader(std::istream& in);

    /// False at end of input. Throws ParseError / OrderingError.
    bool next(AccelSample& out);

    std::size_t line() const noexcept { return line_; }

private:
    std::istream& in_;
    std::string buf_;
    std::vector<std::string_view> fields_;
    std::size_t line_ = 1;
    std::optional<std::int64_t> last_t_;
};

std::vector<AccelSample> parse_accel_csv(std::istream& in);
std::vector<AccelSample> parse_accel_csv(std::string_view text);
std::vector<HrSample> parse_hr_csv(std::istream& in);
std::vector<HrSample> parse_hr_csv(std::string_view text);

/// Buffered accel CSV writer (header written on construction).
class AccelCsvWriter {
public:
    explicit AccelCsvWriter(std::ostream& out);
    ~AccelCsvWriter();
    AccelCsvWriter(const AccelCsvWriter&) = delete;
    AccelCsvWriter& operator=(const AccelCsvWriter&) = delete;

    void write(const AccelSample& s);
    void flush();

private:
    std::ostream& out_;
    std::string buf_;
};

void write_accel_csv(std::ostream& out, std::span<const AccelSample> samples);
void write_hr_csv(std::ostream& out, std::span<const HrSample> samples);

// --- alignment ---------------------------------------------------------------

/// Consumes accel samples in time order and emits per-minute features for
/// every minute holding at least 30 valid one-second windows. A second
/// window [k*1000, (k+1)*1000) is valid with >= max(2, ceil(rate/2)) samples.
class MinuteFeatureBuilder {
public:
    using Sink = std::function<void(std::int64_t minute_index, const FeatureVector&)>;

    MinuteFeatureBuilder(int sample_rate_hz, Sink sink);

    /// Samples must arrive with strictly increasing t_ms (not re-checked).
    void push(const AccelSample& s);
    /// Flushes the pending minute.
    void finish();

    std::size_t dropped_minutes() const noexcept { return dropped_; }

private:
    void close_second();
    void close_minute();

    std::size_t min_samples_;
    Sink sink_;
    std::optional<std::int64_t> minute_;
    std::optional<std::int64_t> second_;
    std::vector<double> xs_, ys_, zs_;
    std::vector<FeatureVector> seconds_;
    std::size_t dropped_ = 0;
};

/// Joins accel-derived minute features with minute-level heart rate. Only
/// minutes present in `hr` and with enough valid seconds survive; phase is 0.
std::vector<MinuteRecord> align_minutes(std::span<const AccelSample> accel,
                                        std::span<const HrSample> hr, int sample_rate_hz);

/// Same join, with minute features already computed (sorted by minute).
std::vector<MinuteRecord> join_minutes(
    std::span<const std::pair<std::int64_t, FeatureVector>> minute_features,
    std::span<const HrSample> hr);

/// `boundaries` = [start_0, start_1, ..., end]; minute m gets the phase p with
/// start_p <= m < start_{p+1}. Minutes outside all phases throw RangeError.
void assign_phases(std::span<MinuteRecord> records, std::span<const std::int64_t> boundaries);

// --- feature matrix ------------------------------------------------------------

/// `minute_index,phase,bpm,<39 feature names>`; missing bpm is an empty field.
void write_feature_csv(std::ostream& out, std::span<const MinuteRecord> records);
std::vector<MinuteRecord> parse_feature_csv(std::istream& in);

}  // namespace accelhr
