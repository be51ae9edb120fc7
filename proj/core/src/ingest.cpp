#include "accelhr/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "accelhr/error.hpp"
#include "text.hpp"

namespace accelhr {

namespace {

constexpr std::string_view kAccelHeader = "t_ms,x,y,z";
constexpr std::string_view kHrHeader = "minute_index,bpm";

std::string_view strip_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

void expect_header(std::istream& in, std::string& buf, std::string_view header) {
    if (!std::getline(in, buf)) throw ParseError(1, "missing header, expected '" + std::string(header) + "'");
    if (strip_cr(buf) != header) {
        throw ParseError(1, "bad header '" + std::string(strip_cr(buf)) + "', expected '" + std::string(header) + "'");
    }
}

double finite_field(std::string_view field, std::size_t line, std::string_view name) {
    auto v = detail::parse_double(field);
    if (!v) throw ParseError(line, "non-numeric " + std::string(name) + " '" + std::string(field) + "'");
    if (!std::isfinite(*v)) throw ParseError(line, "non-finite " + std::string(name));
    return *v;
}

std::int64_t int_field(std::string_view field, std::size_t line, std::string_view name) {
    auto v = detail::parse_int(field);
    if (!v) throw ParseError(line, "non-integer " + std::string(name) + " '" + std::string(field) + "'");
    return *v;
}

}  // namespace

// --- accel CSV -----------------------------------------------------------------

AccelCsvReader::AccelCsvReader(std::istream& in) : in_(in) { expect_header(in_, buf_, kAccelHeader); }

bool AccelCsvReader::next(AccelSample& out) {
    while (std::getline(in_, buf_)) {
        ++line_;
        if (strip_cr(buf_).empty()) continue;
        detail::split_csv(buf_, fields_);
        if (fields_.size() != 4) {
            throw ParseError(line_, "expected 4 fields, got " + std::to_string(fields_.size()));
        }
        AccelSample s;
        s.t_ms = int_field(fields_[0], line_, "t_ms");
        if (s.t_ms < 0) throw ParseError(line_, "negative t_ms");
        s.x = finite_field(fields_[1], line_, "x");
        s.y = finite_field(fields_[2], line_, "y");
        s.z = finite_field(fields_[3], line_, "z");
        if (last_t_ && s.t_ms <= *last_t_) {
            throw OrderingError(line_, "t_ms " + std::to_string(s.t_ms) + " not after " + std::to_string(*last_t_));
        }
        last_t_ = s.t_ms;
        out = s;
        return true;
    }
    return false;
}

std::vector<AccelSample> parse_accel_csv(std::istream& in) {
    AccelCsvReader reader(in);
    std::vector<AccelSample> out;
    AccelSample s;
    while (reader.next(s)) out.push_back(s);
    return out;
}

std::vector<AccelSample> parse_accel_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_accel_csv(in);
}

AccelCsvWriter::AccelCsvWriter(std::ostream& out) : out_(out) {
    buf_.reserve(1 << 20);
    buf_.append(kAccelHeader);
    buf_.push_back('\n');
}

AccelCsvWriter::~AccelCsvWriter() {
    try {
        flush();
    } catch (...) {
    }
}

void AccelCsvWriter::write(const AccelSample& s) {
    detail::append_int(buf_, s.t_ms);
    buf_.push_back(',');
    detail::append_double(buf_, s.x);
    buf_.push_back(',');
    detail::append_double(buf_, s.y);
    buf_.push_back(',');
    detail::append_double(buf_, s.z);
    buf_.push_back('\n');
    if (buf_.size() >= (1 << 20)) flush();
}

void AccelCsvWriter::flush() {
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    buf_.clear();
    if (!out_) throw IoError("write failed");
}

void write_accel_csv(std::ostream& out, std::span<const AccelSample> samples) {
    AccelCsvWriter w(out);
    for (const auto& s : samples) w.write(s);
    w.flush();
}

// --- HR CSV --------------------------------------------------------------------

std::vector<HrSample> parse_hr_csv(std::istream& in) {
    std::string buf;
    expect_header(in, buf, kHrHeader);
    std::vector<std::string_view> fields;
    std::vector<HrSample> out;
    std::size_t line = 1;
    while (std::getline(in, buf)) {
        ++line;
        if (strip_cr(buf).empty()) continue;
        detail::split_csv(buf, fields);
        if (fields.size() != 2) throw ParseError(line, "expected 2 fields, got " + std::to_string(fields.size()));
        HrSample s;
        s.minute_index = int_field(fields[0], line, "minute_index");
        if (s.minute_index < 0) throw ParseError(line, "negative minute_index");
        s.bpm = finite_field(fields[1], line, "bpm");
        if (!bpm_in_range(s.bpm)) {
            throw RangeError("line " + std::to_string(line) + ": bpm " + detail::format_double(s.bpm) +
                             " outside [20, 250]");
        }
        if (!out.empty() && s.minute_index <= out.back().minute_index) {
            throw OrderingError(line, "minute_index " + std::to_string(s.minute_index) + " not after " +
                                          std::to_string(out.back().minute_index));
        }
        out.push_back(s);
    }
    return out;
}

std::vector<HrSample> parse_hr_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_hr_csv(in);
}

void write_hr_csv(std::ostream& out, std::span<const HrSample> samples) {
    std::string buf;
    buf.append(kHrHeader);
    buf.push_back('\n');
    for (const auto& s : samples) {
        detail::append_int(buf, s.minute_index);
        buf.push_back(',');
        detail::append_double(buf, s.bpm);
        buf.push_back('\n');
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed");
}

// --- alignment -----------------------------------------------------------------

MinuteFeatureBuilder::MinuteFeatureBuilder(int sample_rate_hz, Sink sink) : sink_(std::move(sink)) {
    if (sample_rate_hz < 2) throw ConfigError("sample_rate_hz must be >= 2");
    min_samples_ = min_samples_per_second(sample_rate_hz);
    seconds_.reserve(kMaxSecondsPerMinute);
}

void MinuteFeatureBuilder::push(const AccelSample& s) {
    const std::int64_t minute = minute_of(s.t_ms);
    const std::int64_t second = s.t_ms / kMillisPerSecond;
    if (second_ && *second_ != second) close_second();
    if (minute_ && *minute_ != minute) close_minute();
    minute_ = minute;
    second_ = second;
    xs_.push_back(s.x);
    ys_.push_back(s.y);
    zs_.push_back(s.z);
}

void MinuteFeatureBuilder::finish() {
    close_second();
    close_minute();
}

void MinuteFeatureBuilder::close_second() {
    if (xs_.size() >= min_samples_) seconds_.push_back(window_features(xs_, ys_, zs_));
    xs_.clear();
    ys_.clear();
    zs_.clear();
    second_.reset();
}

void MinuteFeatureBuilder::close_minute() {
    if (!minute_) return;
    if (seconds_.size() >= kMinValidSeconds) {
        sink_(*minute_, minute_aggregate(seconds_));
    } else {
        ++dropped_;
    }
    seconds_.clear();
    minute_.reset();
}

std::vector<MinuteRecord> join_minutes(
    std::span<const std::pair<std::int64_t, FeatureVector>> minute_features,
    std::span<const HrSample> hr) {
    std::vector<MinuteRecord> out;
    auto it = minute_features.begin();
    for (const auto& h : hr) {
        while (it != minute_features.end() && it->first < h.minute_index) ++it;
        if (it == minute_features.end()) break;
        if (it->first != h.minute_index) continue;
        MinuteRecord r;
        r.minute_index = h.minute_index;
        r.features = it->second;
        r.bpm = h.bpm;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<MinuteRecord> align_minutes(std::span<const AccelSample> accel,
                                        std::span<const HrSample> hr, int sample_rate_hz) {
    std::vector<std::pair<std::int64_t, FeatureVector>> minutes;
    MinuteFeatureBuilder builder(sample_rate_hz, [&minutes](std::int64_t m, const FeatureVector& fv) {
        minutes.emplace_back(m, fv);
    });
    for (const auto& s : accel) builder.push(s);
    builder.finish();
    auto out = join_minutes(minutes, hr);
    if (out.empty()) throw AlignmentError("no minute has both heart rate and enough acceleration data");
    return out;
}

void assign_phases(std::span<MinuteRecord> records, std::span<const std::int64_t> boundaries) {
    if (boundaries.size() < 2) throw ConfigError("phase boundaries need at least a start and an end");
    for (auto& r : records) {
        auto it = std::upper_bound(boundaries.begin(), boundaries.end(), r.minute_index);
        if (it == boundaries.begin() || it == boundaries.end()) {
            throw RangeError("minute " + std::to_string(r.minute_index) + " lies outside every phase");
        }
        r.phase = static_cast<int>(std::distance(boundaries.begin(), it) - 1);
    }
}

// --- feature matrix --------------------------------------------------------------

void write_feature_csv(std::ostream& out, std::span<const MinuteRecord> records) {
    std::string buf = "minute_index,phase,bpm";
    for (const auto& n : FeatureVector::names()) {
        buf.push_back(',');
        buf.append(n);
    }
    buf.push_back('\n');
    for (const auto& r : records) {
        detail::append_int(buf, r.minute_index);
        buf.push_back(',');
        detail::append_int(buf, r.phase);
        buf.push_back(',');
        if (r.bpm) detail::append_double(buf, *r.bpm);
        for (double v : r.features.values) {
            buf.push_back(',');
            detail::append_double(buf, v);
        }
        buf.push_back('\n');
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed");
}

std::vector<MinuteRecord> parse_feature_csv(std::istream& in) {
    std::string expected = "minute_index,phase,bpm";
    for (const auto& n : FeatureVector::names()) expected += "," + n;
    std::string buf;
    expect_header(in, buf, expected);

    std::vector<std::string_view> fields;
    std::vector<MinuteRecord> out;
    std::size_t line = 1;
    while (std::getline(in, buf)) {
        ++line;
        if (strip_cr(buf).empty()) continue;
        detail::split_csv(buf, fields);
        if (fields.size() != 3 + kFeatureCount) {
            throw ParseError(line, "expected " + std::to_string(3 + kFeatureCount) + " fields, got " +
                                       std::to_string(fields.size()));
        }
        MinuteRecord r;
        r.minute_index = int_field(fields[0], line, "minute_index");
        r.phase = static_cast<int>(int_field(fields[1], line, "phase"));
        if (!fields[2].empty()) {
            const double bpm = finite_field(fields[2], line, "bpm");
            if (!bpm_in_range(bpm)) throw RangeError("line " + std::to_string(line) + ": bpm out of range");
            r.bpm = bpm;
        }
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            r.features[i] = finite_field(fields[3 + i], line, FeatureVector::names()[i]);
        }
        if (!out.empty() && r.minute_index <= out.back().minute_index) {
            throw OrderingError(line, "minute_index not increasing");
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace accelhr
