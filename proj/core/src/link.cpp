#include "accelhr/link.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <exception>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "accelhr/error.hpp"
#include "text.hpp"

namespace accelhr {

// --- encoding -----------------------------------------------------------------------

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void put_number(std::string& out, std::string_view key, double v) {
    if (!std::isfinite(v)) throw ProtocolError("cannot encode non-finite " + std::string(key));
    out.append(",\"").append(key).append("\":");
    detail::append_double(out, v);
}

void put_int(std::string& out, std::string_view key, std::int64_t v) {
    out.append(",\"").append(key).append("\":");
    detail::append_int(out, v);
}

}  // namespace

std::string_view message_type(const Message& m) noexcept {
    static constexpr std::string_view kTypes[] = {"HELLO", "ACC", "HRQ", "HRR", "PRED", "BYE"};
    return kTypes[m.index()];
}

std::string encode_message(const Message& m) {
    std::string out = "{\"type\":\"";
    out.append(message_type(m)).push_back('"');
    std::visit(overloaded{
                   [&](const msg::Hello& h) {
                       out.append(",\"patient_id\":").append(nlohmann::json(h.patient_id).dump());
                       put_int(out, "sample_rate_hz", h.sample_rate_hz);
                   },
                   [&](const msg::Acc& a) {
                       put_int(out, "t_ms", a.t_ms);
                       put_number(out, "x", a.x);
                       put_number(out, "y", a.y);
                       put_number(out, "z", a.z);
                   },
                   [&](const msg::HrQuery& q) { put_int(out, "minute_index", q.minute_index); },
                   [&](const msg::HrReply& r) {
                       put_int(out, "minute_index", r.minute_index);
                       put_number(out, "bpm", r.bpm);
                   },
                   [&](const msg::Pred& p) {
                       put_int(out, "minute_index", p.minute_index);
                       put_number(out, "bpm", p.bpm);
                       put_number(out, "variance", p.variance);
                       out.append(",\"queried\":").append(p.queried ? "true" : "false");
                   },
                   [&](const msg::Bye&) {},
               },
               m);
    out.append("}\n");
    return out;
}

namespace {

class FieldReader {
public:
    FieldReader(const nlohmann::json& j, std::string_view type) : j_(j), type_(type) {}

    const nlohmann::json& field(const char* key) {
        ++used_;
        auto it = j_.find(key);
        if (it == j_.end()) throw ProtocolError(std::string(type_) + ": missing field '" + key + "'");
        return *it;
    }

    std::int64_t integer(const char* key, std::int64_t min_value = 0) {
        const auto& v = field(key);
        if (!v.is_number_integer()) throw ProtocolError(std::string(type_) + ": field '" + key + "' must be an integer");
        const auto out = v.get<std::int64_t>();
        if (out < min_value) throw ProtocolError(std::string(type_) + ": field '" + key + "' out of range");
        return out;
    }

    double number(const char* key) {
        const auto& v = field(key);
        if (!v.is_number()) throw ProtocolError(std::string(type_) + ": field '" + key + "' must be a number");
        return v.get<double>();
    }

    bool boolean(const char* key) {
        const auto& v = field(key);
        if (!v.is_boolean()) throw ProtocolError(std::string(type_) + ": field '" + key + "' must be a boolean");
        return v.get<bool>();
    }

    std::string string(const char* key) {
        const auto& v = field(key);
        if (!v.is_string()) throw ProtocolError(std::string(type_) + ": field '" + key + "' must be a string");
        return v.get<std::string>();
    }

    void finish() const {
        if (j_.size() != used_ + 1) throw ProtocolError(std::string(type_) + ": unexpected field");
    }

private:
    const nlohmann::json& j_;
    std::string_view type_;
    std::size_t used_ = 0;
};

}  // namespace

Message decode_message(std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find('\n') != std::string_view::npos) throw ProtocolError("embedded newline");

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        const std::string what = e.what();
        if (what.find("expected end of input") != std::string::npos) throw ProtocolError("trailing garbage after message");
        throw ProtocolError("malformed JSON: " + what);
    }
    if (!j.is_object()) throw ProtocolError("message must be a JSON object");
    auto type_it = j.find("type");
    if (type_it == j.end()) throw ProtocolError("missing field 'type'");
    if (!type_it->is_string()) throw ProtocolError("field 'type' must be a string");
    const auto type = type_it->get<std::string>();

    FieldReader r(j, type);
    Message out;
    if (type == "HELLO") {
        msg::Hello h;
        h.patient_id = r.string("patient_id");
        h.sample_rate_hz = r.integer("sample_rate_hz", 2);
        out = h;
    } else if (type == "ACC") {
        msg::Acc a;
        a.t_ms = r.integer("t_ms");
        a.x = r.number("x");
        a.y = r.number("y");
        a.z = r.number("z");
        out = a;
    } else if (type == "HRQ") {
        out = msg::HrQuery{r.integer("minute_index")};
    } else if (type == "HRR") {
        msg::HrReply h;
        h.minute_index = r.integer("minute_index");
        h.bpm = r.number("bpm");
        out = h;
    } else if (type == "PRED") {
        msg::Pred p;
        p.minute_index = r.integer("minute_index");
        p.bpm = r.number("bpm");
        p.variance = r.number("variance");
        p.queried = r.boolean("queried");
        out = p;
    } else if (type == "BYE") {
        out = msg::Bye{};
    } else {
        throw ProtocolError("unknown type '" + type + "'");
    }
    r.finish();
    return out;
}

// --- energy -----------------------------------------------------------------------

void EnergyModel::validate() const {
    if (!(accel_cost_per_minute > 0.0) || !(ppg_cost_per_query > 0.0)) {
        throw ConfigError("energy costs must be > 0");
    }
}

EnergyLedger make_ledger(std::int64_t minutes, std::int64_t queries, const EnergyModel& model) {
    model.validate();
    EnergyLedger l;
    l.minutes_sensed = minutes;
    l.queries = queries;
    l.accel_energy = static_cast<double>(minutes) * model.accel_cost_per_minute;
    l.ppg_energy = static_cast<double>(queries) * model.ppg_cost_per_query;
    l.total = l.accel_energy + l.ppg_energy;
    const double always = static_cast<double>(minutes) * (model.accel_cost_per_minute + model.ppg_cost_per_query);
    l.savings_vs_always_query = always > 0.0 ? 1.0 - l.total / always : 0.0;
    return l;
}

std::string ledger_to_json(const EnergyLedger& l) {
    nlohmann::ordered_json j;
    j["minutes_sensed"] = l.minutes_sensed;
    j["queries"] = l.queries;
    j["accel_energy"] = l.accel_energy;
    j["ppg_energy"] = l.ppg_energy;
    j["total"] = l.total;
    j["savings_vs_always_query"] = l.savings_vs_always_query;
    return j.dump(2) + "\n";
}

// --- in-memory transport --------------------------------------------------------------

namespace {

struct MemoryLink {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::string> queue[2];  // queue[i] is read by endpoint i
    bool closed = false;
};

class MemoryChannel final : public LineChannel {
public:
    MemoryChannel(std::shared_ptr<MemoryLink> link, int side) : link_(std::move(link)), side_(side) {}
    ~MemoryChannel() override { close(); }

    void send(std::string_view line) override {
        if (line.empty() || line.back() != '\n') throw ProtocolError("line must end in a newline");
        std::lock_guard lock(link_->mutex);
        if (link_->closed) throw IoError("channel closed");
        link_->queue[1 - side_].emplace_back(line.substr(0, line.size() - 1));
        link_->cv.notify_all();
    }

    Received recv(std::chrono::milliseconds timeout) override {
        std::unique_lock lock(link_->mutex);
        auto& q = link_->queue[side_];
        if (!link_->cv.wait_for(lock, timeout, [&] { return !q.empty() || link_->closed; })) {
            return {RecvStatus::timeout, {}};
        }
        if (q.empty()) return {RecvStatus::closed, {}};
        Received r{RecvStatus::line, std::move(q.front())};
        q.pop_front();
        return r;
    }

    void close() override {
        std::lock_guard lock(link_->mutex);
        link_->closed = true;
        link_->cv.notify_all();
    }

private:
    std::shared_ptr<MemoryLink> link_;
    int side_;
};

}  // namespace

std::pair<std::unique_ptr<LineChannel>, std::unique_ptr<LineChannel>> make_memory_channel_pair() {
    auto link = std::make_shared<MemoryLink>();
    return {std::make_unique<MemoryChannel>(link, 0), std::make_unique<MemoryChannel>(link, 1)};
}

// --- TCP transport -------------------------------------------------------------------

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
        throw IoError("cannot resolve host '" + host + "'");
    }
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return addr;
}

}  // namespace

TcpChannel::TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpChannel::~TcpChannel() { close(); }

void TcpChannel::send(std::string_view line) {
    if (fd_ < 0) throw IoError("channel closed");
    while (!line.empty()) {
        const ssize_t n = ::send(fd_, line.data(), line.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IoError(errno_text("send"));
        }
        line.remove_prefix(static_cast<std::size_t>(n));
    }
}

Received TcpChannel::recv(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        const auto nl = pending_.find('\n');
        if (nl != std::string::npos) {
            Received r{RecvStatus::line, pending_.substr(0, nl)};
            pending_.erase(0, nl + 1);
            return r;
        }
        if (eof_ || fd_ < 0) return {RecvStatus::closed, {}};

        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        pollfd p{fd_, POLLIN, 0};
        const int ready = ::poll(&p, 1, static_cast<int>(std::max<std::int64_t>(0, left.count())));
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw IoError(errno_text("poll"));
        }
        if (ready == 0) return {RecvStatus::timeout, {}};

        char buf[65536];
        const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            if (errno == ECONNRESET) {
                eof_ = true;
                continue;
            }
            throw IoError(errno_text("recv"));
        }
        if (n == 0) {
            eof_ = true;
            continue;
        }
        pending_.append(buf, static_cast<std::size_t>(n));
    }
}

void TcpChannel::close() {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        fd_ = -1;
    }
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) throw IoError(errno_text("socket"));
    int one = 1;
    setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    auto addr = resolve(host, port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        const auto msg = errno_text("bind");
        ::close(fd_);
        throw IoError(msg);
    }
    if (::listen(fd_, 16) < 0) {
        const auto msg = errno_text("listen");
        ::close(fd_);
        throw IoError(msg);
    }
    socklen_t len = sizeof(addr);
    getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpChannel> TcpListener::accept(std::chrono::milliseconds timeout) {
    pollfd p{fd_, POLLIN, 0};
    int ready;
    do {
        ready = ::poll(&p, 1, static_cast<int>(timeout.count()));
    } while (ready < 0 && errno == EINTR);
    if (ready < 0) throw IoError(errno_text("poll"));
    if (ready == 0) return nullptr;
    const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) throw IoError(errno_text("accept"));
    return std::make_unique<TcpChannel>(fd);
}

std::unique_ptr<TcpChannel> tcp_connect(const std::string& host, std::uint16_t port,
                                        std::chrono::milliseconds timeout) {
    const auto addr = resolve(host, port);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
        if (fd < 0) throw IoError(errno_text("socket"));
        if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
            return std::make_unique<TcpChannel>(fd);
        }
        const auto msg = errno_text("connect");
        ::close(fd);
        if (std::chrono::steady_clock::now() >= deadline) throw IoError(msg);
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

// --- transcript ---------------------------------------------------------------------

void Transcript::record(char direction, std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    std::lock_guard lock(mutex_);
    out_ << direction << line << '\n';
}

RecordingChannel::RecordingChannel(LineChannel& inner, Transcript& transcript, char outbound)
    : inner_(inner), transcript_(transcript), outbound_(outbound), inbound_(outbound == '>' ? '<' : '>') {}

void RecordingChannel::send(std::string_view line) {
    transcript_.record(outbound_, line);
    inner_.send(line);
}

Received RecordingChannel::recv(std::chrono::milliseconds timeout) {
    auto r = inner_.recv(timeout);
    if (r.status == RecvStatus::line) transcript_.record(inbound_, r.line);
    return r;
}

// --- gateway ------------------------------------------------------------------------

namespace {

struct PeerTimeout {};

class GatewaySession {
public:
    GatewaySession(LineChannel& channel, const GatewayOptions& options) : channel_(channel), options_(options) {
        options_.ppaw.validate();
        options_.energy.validate();
    }

    GatewayResult run() {
        try {
            serve();
            result_.completed = true;
        } catch (const PeerTimeout&) {
            result_.completed = false;
            result_.abort_reason = "peer timeout";
            channel_.close();
        } catch (...) {
            channel_.close();
            throw;
        }
        finalize();
        return std::move(result_);
    }

private:
    Message next_message() {
        if (!backlog_.empty()) {
            auto m = std::move(backlog_.front());
            backlog_.pop_front();
            return m;
        }
        return receive();
    }

    Message receive() {
        auto r = channel_.recv(options_.timeout);
        if (r.status == RecvStatus::timeout) throw PeerTimeout{};
        if (r.status == RecvStatus::closed) throw ProtocolError("peer closed the connection before BYE");
        return decode_message(r.line);
    }

    void send(const Message& m) { channel_.send(encode_message(m)); }

    void serve() {
        auto first = next_message();
        const auto* hello = std::get_if<msg::Hello>(&first);
        if (!hello) throw ProtocolError("expected HELLO, got " + std::string(message_type(first)));
        result_.patient_id = hello->patient_id;
        builder_.emplace(static_cast<int>(hello->sample_rate_hz),
                         [this](std::int64_t m, const FeatureVector& fv) { ready_.emplace_back(m, fv); });

        while (true) {
            auto m = next_message();
            if (auto* acc = std::get_if<msg::Acc>(&m)) {
                if (last_t_ && acc->t_ms <= *last_t_) {
                    throw ProtocolError("ACC t_ms " + std::to_string(acc->t_ms) + " not after " + std::to_string(*last_t_));
                }
                last_t_ = acc->t_ms;
                builder_->push(AccelSample{acc->t_ms, acc->x, acc->y, acc->z});
                drain_ready();
            } else if (std::holds_alternative<msg::Bye>(m)) {
                builder_->finish();
                drain_ready();
                send(msg::Bye{});
                return;
            } else {
                throw ProtocolError("unexpected " + std::string(message_type(m)) + " from wearable");
            }
        }
    }

    void drain_ready() {
        while (!ready_.empty()) {
            auto [minute, fv] = ready_.front();
            ready_.pop_front();
            process_minute(minute, fv);
        }
    }

    double query(std::int64_t minute) {
        send(msg::HrQuery{minute});
        ++queries_;
        while (true) {
            auto m = receive();
            if (auto* r = std::get_if<msg::HrReply>(&m)) {
                if (r->minute_index != minute) {
                    throw ProtocolError("HRR for minute " + std::to_string(r->minute_index) + ", expected " +
                                        std::to_string(minute));
                }
                if (!bpm_in_range(r->bpm)) throw ProtocolError("HRR bpm outside [20, 250]");
                return r->bpm;
            }
            if (std::holds_alternative<msg::Acc>(m) || std::holds_alternative<msg::Bye>(m)) {
                backlog_.push_back(std::move(m));
                continue;
            }
            throw ProtocolError("unexpected " + std::string(message_type(m)) + " while waiting for HRR");
        }
    }

    void process_minute(std::int64_t minute, const FeatureVector& fv) {
        if (!state_) {
            const double bpm = query(minute);
            result_.bootstrap.push_back({minute, bpm});
            first_rows_.push_back({fv, bpm});
            send(msg::Pred{minute, bpm, 0.0, true});
            if (first_rows_.size() == options_.ppaw.N) state_.emplace(ppaw_init(options_.ppaw, first_rows_));
            return;
        }
        MinuteRecord rec;
        rec.minute_index = minute;
        rec.features = fv;
        std::exception_ptr failure;
        StepOutcome out;
        try {
            out = ppaw_step(*state_, rec, [&](std::int64_t m) {
                try {
                    return query(m);
                } catch (...) {
                    failure = std::current_exception();
                    throw;
                }
            });
        } catch (const SensorError&) {
            if (failure) std::rethrow_exception(failure);
            throw;
        }
        result_.steps.push_back(out);
        send(msg::Pred{minute, out.predicted_bpm, out.variance, out.queried});
    }

    void finalize() {
        result_.report = summarize_ppaw(options_.ppaw, result_.bootstrap, result_.steps, {});
        result_.report.config["scored_on"] = "queried_minutes";
        result_.report.config["patient_id"] = result_.patient_id;
        const auto minutes = static_cast<std::int64_t>(result_.bootstrap.size() + result_.steps.size());
        result_.ledger = make_ledger(minutes, queries_, options_.energy);
    }

    LineChannel& channel_;
    GatewayOptions options_;
    GatewayResult result_;
    std::deque<Message> backlog_;
    std::optional<MinuteFeatureBuilder> builder_;
    std::deque<std::pair<std::int64_t, FeatureVector>> ready_;
    std::optional<std::int64_t> last_t_;
    LabeledSet first_rows_;
    std::optional<PpawState> state_;
    std::int64_t queries_ = 0;
};

}  // namespace

GatewayResult gateway_serve(LineChannel& channel, const GatewayOptions& options) {
    return GatewaySession(channel, options).run();
}

// --- wearable -------------------------------------------------------------------------

namespace {

// Which minutes the gateway will score, by the same validity rule its
// MinuteFeatureBuilder applies. push() reports the minute a sample closes.
class MinuteTally {
public:
    explicit MinuteTally(int sample_rate_hz) : floor_(min_samples_per_second(sample_rate_hz)) {}

    std::optional<std::int64_t> push(std::int64_t t_ms) {
        const auto second = t_ms / kMillisPerSecond;
        const auto minute = minute_of(t_ms);
        std::optional<std::int64_t> closed;
        if (second_ && *second_ != second) close_second();
        if (minute_ && *minute_ != minute) {
            if (valid_seconds_ >= kMinValidSeconds) closed = minute_;
            valid_seconds_ = 0;
        }
        minute_ = minute;
        second_ = second;
        ++samples_;
        return closed;
    }

private:
    void close_second() {
        if (samples_ >= floor_) ++valid_seconds_;
        samples_ = 0;
    }

    std::size_t floor_;
    std::optional<std::int64_t> minute_, second_;
    std::size_t samples_ = 0;
    std::size_t valid_seconds_ = 0;
};

class WearableSession {
public:
    WearableSession(LineChannel& channel, std::span<const HrSample> hr, const WearableOptions& options)
        : channel_(channel), hr_(hr), options_(options) {
        options_.energy.validate();
    }

    WearableResult run(const SampleSource& source) {
        send(msg::Hello{options_.patient_id, options_.sample_rate_hz});
        MinuteTally tally(options_.sample_rate_hz);
        const auto start = std::chrono::steady_clock::now();
        std::optional<std::int64_t> minute;
        AccelSample s;
        while (source(s)) {
            if (options_.realtime) {
                const auto at = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                            std::chrono::duration<double, std::milli>(static_cast<double>(s.t_ms) /
                                                                                      *options_.realtime));
                std::this_thread::sleep_until(at);
            }
            const auto m = minute_of(s.t_ms);
            if (!minute || *minute != m) {
                ++minutes_;
                minute = m;
            }
            const auto closed = tally.push(s.t_ms);
            send(msg::Acc{s.t_ms, s.x, s.y, s.z});
            // lockstep: the gateway answers a closed minute before more samples go out,
            // so every line lands in the same place on every run
            if (closed) await_prediction(*closed);
        }
        send(msg::Bye{});
        while (!done_) {
            auto r = channel_.recv(options_.timeout);
            if (r.status == RecvStatus::timeout) throw IoError("gateway did not finish the session in time");
            if (r.status == RecvStatus::closed) throw ProtocolError("gateway closed the connection before BYE");
            handle(r.line);
        }
        result_.ledger = make_ledger(minutes_, queries_, options_.energy);
        return std::move(result_);
    }

private:
    void send(const Message& m) { channel_.send(encode_message(m)); }

    void await_prediction(std::int64_t minute) {
        while (result_.predictions.empty() || result_.predictions.back().minute_index < minute) {
            auto r = channel_.recv(options_.timeout);
            if (r.status == RecvStatus::timeout) throw IoError("no prediction for minute " + std::to_string(minute));
            if (r.status == RecvStatus::closed) throw ProtocolError("gateway closed the connection");
            handle(r.line);
            if (done_) throw ProtocolError("gateway ended the session early");
        }
    }

    void handle(const std::string& line) {
        auto m = decode_message(line);
        if (auto* q = std::get_if<msg::HrQuery>(&m)) {
            auto it = std::lower_bound(hr_.begin(), hr_.end(), q->minute_index,
                                       [](const HrSample& h, std::int64_t v) { return h.minute_index < v; });
            if (it == hr_.end() || it->minute_index != q->minute_index) {
                channel_.close();
                throw ProtocolError("no recorded heart rate for minute " + std::to_string(q->minute_index));
            }
            send(msg::HrReply{q->minute_index, it->bpm});
            ++queries_;
        } else if (auto* p = std::get_if<msg::Pred>(&m)) {
            result_.predictions.push_back(*p);
        } else if (std::holds_alternative<msg::Bye>(m)) {
            done_ = true;
        } else {
            throw ProtocolError("unexpected " + std::string(message_type(m)) + " from gateway");
        }
    }

    LineChannel& channel_;
    std::span<const HrSample> hr_;
    WearableOptions options_;
    WearableResult result_;
    std::int64_t minutes_ = 0;
    std::int64_t queries_ = 0;
    bool done_ = false;
};

}  // namespace

WearableResult wearable_replay(LineChannel& channel, const SampleSource& source, std::span<const HrSample> hr,
                               const WearableOptions& options) {
    return WearableSession(channel, hr, options).run(source);
}

WearableResult wearable_replay(LineChannel& channel, std::span<const AccelSample> accel,
                               std::span<const HrSample> hr, const WearableOptions& options) {
    std::size_t i = 0;
    return wearable_replay(
        channel,
        [&](AccelSample& s) {
            if (i >= accel.size()) return false;
            s = accel[i++];
            return true;
        },
        hr, options);
}

}  // namespace accelhr
