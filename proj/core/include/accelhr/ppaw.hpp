#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "accelhr/ingest.hpp"
#include "accelhr/regress.hpp"

namespace accelhr {

/// Fixed-capacity FIFO; pushing into a full buffer evicts the oldest entry.
/// Indexing is oldest-first.
template <typename T>
class RingBuffer {
public:
    explicit RingBuffer(std::size_t capacity) : capacity_(capacity) { items_.reserve(capacity); }

    void push(T value) {
        if (capacity_ == 0) return;
        if (items_.size() < capacity_) {
            items_.push_back(std::move(value));
            return;
        }
        items_[head_] = std::move(value);
        head_ = (head_ + 1) % capacity_;
    }

    std::size_t size() const noexcept { return items_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    bool full() const noexcept { return items_.size() == capacity_; }
    bool empty() const noexcept { return items_.empty(); }

    const T& operator[](std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

    std::vector<T> to_vector() const {
        std::vector<T> out;
        out.reserve(items_.size());
        for (std::size_t i = 0; i < items_.size(); ++i) out.push_back((*this)[i]);
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<T> items_;
};

struct PpawConfig {
    std::size_t L = 10;     // learners
    std::size_t N = 5;      // history / labeled buffer size
    double O = 3.0;         // uncertainty multiplier
    double T = 10.0;        // per-learner error threshold, bpm
    std::int64_t TTL = 10;  // predictions before a forced retrain
    TreeParams tree;
    std::uint64_t seed = 42;

    void validate() const;
};

nlohmann::ordered_json ppaw_config_to_json(const PpawConfig& c);

struct PpawState {
    PpawConfig config;
    Ensemble ensemble;
    RingBuffer<double> var_history;
    RingBuffer<LabeledRow> labeled_buffer;  // sensor ground truth only
    std::int64_t minutes_seen = 0;

    explicit PpawState(const PpawConfig& cfg)
        : config(cfg), var_history(cfg.N), labeled_buffer(cfg.N) {}
};

struct StepOutcome {
    std::int64_t minute_index = 0;
    double predicted_bpm = 0.0;  // always the pre-query prediction
    double variance = 0.0;
    bool queried = false;
    std::optional<double> true_bpm;  // present iff queried
    int retrained_on_error = 0;
    int retrained_on_ttl = 0;

    friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

/// Cold start (history not yet holding N values) is always an outlier.
/// Otherwise: variance > mean(history) + O * std(history), population std.
/// The variance is appended afterwards, evicting the oldest value.
bool is_outlier(RingBuffer<double>& history, double variance, double O);

enum class RefitReason : std::uint64_t { teach = 1, error = 2, ttl = 3 };

/// Seed salt handed to refit_learner / retrain_learner for learner `learner`
/// at minute `minute_index`.
std::uint64_t refit_salt(std::int64_t minute_index, std::size_t learner, RefitReason reason);

/// Ground-truth heart rate for a minute; may throw.
using QueryFn = std::function<double(std::int64_t minute_index)>;

/// Fits the ensemble on exactly N labeled rows (ensemble seed = cfg.seed).
PpawState ppaw_init(const PpawConfig& cfg, std::span<const LabeledRow> first_n);

/// One minute of the online loop:
///  1. predict (ensemble mean and variance, ages +1);
///  2. if the variance is an outlier: query, push the label, refit every
///     learner on the labeled buffer (ages kept), then retrain (age reset)
///     each learner whose own prediction missed the truth by more than T;
///  3. retrain every learner whose age reached TTL.
/// A failing query throws SensorError and leaves everything but the
/// variance history as it was.
StepOutcome ppaw_step(PpawState& state, const MinuteRecord& minute, const QueryFn& query);

/// Replay: init on the first N records, step through the rest, answering
/// queries from the records' own bpm.
std::vector<StepOutcome> ppaw_run(const PpawConfig& cfg, std::span<const MinuteRecord> stream);

/// Labeled rows from the first N records of a replay stream.
LabeledSet bootstrap_rows(std::span<const MinuteRecord> stream, std::size_t n);

/// A bootstrap minute as it appears in a trace: queried, no prediction.
struct BootstrapMinute {
    std::int64_t minute_index = 0;
    double bpm = 0.0;

    friend bool operator==(const BootstrapMinute&, const BootstrapMinute&) = default;
};

/// `minute_index,predicted_bpm,variance,queried,true_bpm,retrained_on_error,retrained_on_ttl`.
/// Bootstrap minutes come first with empty prediction/variance and queried=1.
void write_trace_csv(std::ostream& out, std::span<const BootstrapMinute> bootstrap,
                     std::span<const StepOutcome> steps);

struct TraceRow {
    std::int64_t minute_index = 0;
    std::optional<double> predicted_bpm;
    std::optional<double> variance;
    bool queried = false;
    std::optional<double> true_bpm;
    int retrained_on_error = 0;
    int retrained_on_ttl = 0;
};

std::vector<TraceRow> parse_trace_csv(std::istream& in);

}  // namespace accelhr
