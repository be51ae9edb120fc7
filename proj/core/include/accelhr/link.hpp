#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "accelhr/evalx.hpp"
#include "accelhr/ingest.hpp"
#include "accelhr/ppaw.hpp"

namespace accelhr {

// --- wire protocol ------------------------------------------------------------------
//
// One JSON object per '\n'-terminated line, keys in the order listed:
//   HELLO {type, patient_id, sample_rate_hz}       wearable -> gateway
//   ACC   {type, t_ms, x, y, z}                     wearable -> gateway
//   HRQ   {type, minute_index}                      gateway  -> wearable
//   HRR   {type, minute_index, bpm}                 wearable -> gateway
//   PRED  {type, minute_index, bpm, variance, queried}  gateway -> wearable
//   BYE   {type}                                    both directions

namespace msg {

struct Hello {
    std::string patient_id;
    std::int64_t sample_rate_hz = 0;
    friend bool operator==(const Hello&, const Hello&) = default;
};
struct Acc {
    std::int64_t t_ms = 0;
    double x = 0.0, y = 0.0, z = 0.0;
    friend bool operator==(const Acc&, const Acc&) = default;
};
struct HrQuery {
    std::int64_t minute_index = 0;
    friend bool operator==(const HrQuery&, const HrQuery&) = default;
};
struct HrReply {
    std::int64_t minute_index = 0;
    double bpm = 0.0;
    friend bool operator==(const HrReply&, const HrReply&) = default;
};
struct Pred {
    std::int64_t minute_index = 0;
    double bpm = 0.0;
    double variance = 0.0;
    bool queried = false;
    friend bool operator==(const Pred&, const Pred&) = default;
};
struct Bye {
    friend bool operator==(const Bye&, const Bye&) = default;
};

}  // namespace msg

using Message = std::variant<msg::Hello, msg::Acc, msg::HrQuery, msg::HrReply, msg::Pred, msg::Bye>;

std::string_view message_type(const Message& m) noexcept;

/// Canonical line including the trailing '\n'. Non-finite numbers throw
/// ProtocolError.
std::string encode_message(const Message& m);

/// Accepts one line with or without its '\n'. Unknown type, missing or
/// mistyped field, unexpected field or trailing garbage throw ProtocolError.
Message decode_message(std::string_view line);

// --- energy ---------------------------------------------------------------------

struct EnergyModel {
    double accel_cost_per_minute = 1.0;
    double ppg_cost_per_query = 5000.0;

    void validate() const;
};

struct EnergyLedger {
    std::int64_t minutes_sensed = 0;
    std::int64_t queries = 0;
    double accel_energy = 0.0;
    double ppg_energy = 0.0;
    double total = 0.0;
    double savings_vs_always_query = 0.0;

    friend bool operator==(const EnergyLedger&, const EnergyLedger&) = default;
};

EnergyLedger make_ledger(std::int64_t minutes, std::int64_t queries, const EnergyModel& model);
std::string ledger_to_json(const EnergyLedger& l);

// --- transport ------------------------------------------------------------------

enum class RecvStatus { line, timeout, closed };

struct Received {
    RecvStatus status = RecvStatus::closed;
    std::string line;  // without the '\n'
};

/// Bidirectional '\n'-framed byte stream.
class LineChannel {
public:
    virtual ~LineChannel() = default;
    /// `line` must already end in '\n'.
    virtual void send(std::string_view line) = 0;
    virtual Received recv(std::chrono::milliseconds timeout) = 0;
    virtual void close() = 0;
};

/// Two connected in-process endpoints.
std::pair<std::unique_ptr<LineChannel>, std::unique_ptr<LineChannel>> make_memory_channel_pair();

/// Connected TCP socket.
class TcpChannel final : public LineChannel {
public:
    explicit TcpChannel(int fd);
    ~TcpChannel() override;
    TcpChannel(const TcpChannel&) = delete;
    TcpChannel& operator=(const TcpChannel&) = delete;

    void send(std::string_view line) override;
    Received recv(std::chrono::milliseconds timeout) override;
    void close() override;

private:
    int fd_;
    std::string pending_;
    bool eof_ = false;
};

class TcpListener {
public:
    /// Port 0 picks an ephemeral port.
    TcpListener(const std::string& host, std::uint16_t port);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const noexcept { return port_; }
    std::unique_ptr<TcpChannel> accept(std::chrono::milliseconds timeout);

private:
    int fd_;
    std::uint16_t port_;
};

std::unique_ptr<TcpChannel> tcp_connect(const std::string& host, std::uint16_t port,
                                        std::chrono::milliseconds timeout);

/// Session transcript: every line either direction, prefixed '>'
/// (wearable -> gateway) or '<' (gateway -> wearable). Thread-safe.
class Transcript {
public:
    explicit Transcript(std::ostream& out) : out_(out) {}
    void record(char direction, std::string_view line);

private:
    std::mutex mutex_;
    std::ostream& out_;
};

/// Wraps a channel and records traffic. `outbound` is the prefix for lines
/// this endpoint sends ('>' on the wearable, '<' on the gateway).
class RecordingChannel final : public LineChannel {
public:
    RecordingChannel(LineChannel& inner, Transcript& transcript, char outbound);

    void send(std::string_view line) override;
    Received recv(std::chrono::milliseconds timeout) override;
    void close() override { inner_.close(); }

private:
    LineChannel& inner_;
    Transcript& transcript_;
    char outbound_;
    char inbound_;
};

// --- gateway / wearable -------------------------------------------------------------

struct GatewayOptions {
    PpawConfig ppaw;
    EnergyModel energy;
    std::chrono::milliseconds timeout{30'000};
};

struct GatewayResult {
    std::string patient_id;
    RunReport report;  // scored on the minutes the gateway saw ground truth for
    EnergyLedger ledger;
    std::vector<BootstrapMinute> bootstrap;
    std::vector<StepOutcome> steps;
    bool completed = false;   // false after a peer timeout
    std::string abort_reason;
};

/// Serves one wearable session: HELLO, ACC..., BYE. Every finished minute
/// with >= 30 valid seconds becomes a PPAW minute (the first N are queried
/// to initialize), answered with a PRED; BYE is echoed after the last one.
/// Protocol violations throw ProtocolError; a silent peer yields a partial
/// result with `completed == false`.
GatewayResult gateway_serve(LineChannel& channel, const GatewayOptions& options);

struct WearableOptions {
    std::string patient_id = "synthetic";
    int sample_rate_hz = 50;
    EnergyModel energy;
    /// Replay speed-up relative to wall clock; unset streams as fast as possible.
    std::optional<double> realtime;
    std::chrono::milliseconds timeout{30'000};
};

struct WearableResult {
    EnergyLedger ledger;
    std::vector<msg::Pred> predictions;
};

/// Pulls the next accel sample; false when exhausted.
using SampleSource = std::function<bool(AccelSample&)>;

/// Streams HELLO, every sample as ACC, then BYE; answers each HRQ with the
/// recorded bpm of that minute. An HRQ for an unrecorded minute throws
/// ProtocolError (after closing the channel).
WearableResult wearable_replay(LineChannel& channel, const SampleSource& source, std::span<const HrSample> hr,
                               const WearableOptions& options);

WearableResult wearable_replay(LineChannel& channel, std::span<const AccelSample> accel,
                               std::span<const HrSample> hr, const WearableOptions& options);

}  // namespace accelhr
