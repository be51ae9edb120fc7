#pragma once

#include <stdexcept>
#include <string>

namespace accelhr {

// Every failure surfaced by the core library carries a short category
// ("parse", "range", "protocol", ...) so the CLI can print
// `error: <category>: <detail>` without string matching.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& detail)
        : std::runtime_error(detail), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

// Malformed text input. `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& detail)
        : Error("parse", "line " + std::to_string(line) + ": " + detail), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class OrderingError : public Error {
public:
    OrderingError(std::size_t line, const std::string& detail)
        : Error("ordering", "line " + std::to_string(line) + ": " + detail), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class RangeError : public Error {
public:
    explicit RangeError(const std::string& detail) : Error("range", detail) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& detail) : Error("config", detail) {}
};

class AlignmentError : public Error {
public:
    explicit AlignmentError(const std::string& detail) : Error("alignment", detail) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& detail) : Error("shape", detail) {}
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& detail) : Error("insufficient-data", detail) {}
};

class FitError : public Error {
public:
    explicit FitError(const std::string& detail) : Error("fit", detail) {}
};

class SensorError : public Error {
public:
    explicit SensorError(const std::string& detail) : Error("sensor", detail) {}
};

class MetricError : public Error {
public:
    explicit MetricError(const std::string& detail) : Error("metric", detail) {}
};

class ExperimentError : public Error {
public:
    explicit ExperimentError(const std::string& detail) : Error("experiment", detail) {}
};

class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& detail) : Error("protocol", detail) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& detail) : Error("io", detail) {}
};

}  // namespace accelhr
