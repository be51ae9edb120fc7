#include "accelhr/ppaw.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "accelhr/error.hpp"
#include "accelhr/rng.hpp"
#include "text.hpp"

namespace accelhr {

namespace {

constexpr std::string_view kTraceHeader =
    "minute_index,predicted_bpm,variance,queried,true_bpm,retrained_on_error,retrained_on_ttl";

}  // namespace

void PpawConfig::validate() const {
    if (L < 1) throw ConfigError("L must be >= 1");
    if (N < 2) throw ConfigError("N must be >= 2");
    if (!(O > 0.0) || !std::isfinite(O)) throw ConfigError("O must be > 0");
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T must be > 0");
    if (TTL < 1) throw ConfigError("TTL must be >= 1");
    tree.validate();
}

nlohmann::ordered_json ppaw_config_to_json(const PpawConfig& c) {
    nlohmann::ordered_json j;
    j["L"] = c.L;
    j["N"] = c.N;
    j["O"] = c.O;
    j["T"] = c.T;
    j["TTL"] = c.TTL;
    j["seed"] = c.seed;
    j["tree"] = tree_params_to_json(c.tree);
    return j;
}

bool is_outlier(RingBuffer<double>& history, double variance, double O) {
    bool outlier = true;
    if (history.full()) {
        const auto n = static_cast<double>(history.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < history.size(); ++i) sum += history[i];
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < history.size(); ++i) ss += (history[i] - mean) * (history[i] - mean);
        outlier = variance > mean + O * std::sqrt(ss / n);
    }
    history.push(variance);
    return outlier;
}

std::uint64_t refit_salt(std::int64_t minute_index, std::size_t learner, RefitReason reason) {
    return mix_seed({static_cast<std::uint64_t>(minute_index), learner, static_cast<std::uint64_t>(reason)});
}

PpawState ppaw_init(const PpawConfig& cfg, std::span<const LabeledRow> first_n) {
    cfg.validate();
    if (first_n.size() != cfg.N) {
        throw Error("init", "need exactly N=" + std::to_string(cfg.N) + " labeled minutes, got " +
                                std::to_string(first_n.size()));
    }
    PpawState state(cfg);
    state.ensemble = fit_ensemble(first_n, cfg.L, cfg.tree, cfg.seed);
    for (const auto& row : first_n) state.labeled_buffer.push(row);
    state.minutes_seen = static_cast<std::int64_t>(first_n.size());
    return state;
}

StepOutcome ppaw_step(PpawState& state, const MinuteRecord& minute, const QueryFn& query) {
    const auto& cfg = state.config;
    if (!minute.features.all_finite()) throw ShapeError("minute features must be finite");

    const auto ages_before = state.ensemble.ages;
    const auto pred = predict_ensemble(state.ensemble, minute.features);

    StepOutcome out;
    out.minute_index = minute.minute_index;
    out.predicted_bpm = pred.mean;
    out.variance = pred.variance;

    if (is_outlier(state.var_history, pred.variance, cfg.O)) {
        double truth = 0.0;
        try {
            truth = query(minute.minute_index);
        } catch (const std::exception& e) {
            state.ensemble.ages = ages_before;
            throw SensorError("heart-rate query for minute " + std::to_string(minute.minute_index) +
                              " failed: " + e.what());
        }
        if (!std::isfinite(truth) || !bpm_in_range(truth)) {
            state.ensemble.ages = ages_before;
            throw SensorError("heart-rate query for minute " + std::to_string(minute.minute_index) +
                              " returned an implausible value");
        }
        out.queried = true;
        out.true_bpm = truth;
        state.labeled_buffer.push(LabeledRow{minute.features, truth});
        const auto recent = state.labeled_buffer.to_vector();

        for (std::size_t i = 0; i < state.ensemble.size(); ++i) {
            refit_learner(state.ensemble, i, recent, refit_salt(minute.minute_index, i, RefitReason::teach));
        }
        for (std::size_t i = 0; i < state.ensemble.size(); ++i) {
            if (std::abs(pred.per_learner[i] - truth) > cfg.T) {
                retrain_learner(state.ensemble, i, recent, refit_salt(minute.minute_index, i, RefitReason::error));
                ++out.retrained_on_error;
            }
        }
    }

    std::vector<LabeledRow> recent;
    for (std::size_t i = 0; i < state.ensemble.size(); ++i) {
        if (state.ensemble.ages[i] >= cfg.TTL) {
            if (recent.empty()) recent = state.labeled_buffer.to_vector();
            retrain_learner(state.ensemble, i, recent, refit_salt(minute.minute_index, i, RefitReason::ttl));
            ++out.retrained_on_ttl;
        }
    }

    ++state.minutes_seen;
    return out;
}

LabeledSet bootstrap_rows(std::span<const MinuteRecord> stream, std::size_t n) {
    LabeledSet rows;
    for (std::size_t i = 0; i < n && i < stream.size(); ++i) {
        if (!stream[i].bpm) throw Error("run", "minute " + std::to_string(stream[i].minute_index) + " has no heart rate");
        rows.push_back({stream[i].features, *stream[i].bpm});
    }
    return rows;
}

std::vector<StepOutcome> ppaw_run(const PpawConfig& cfg, std::span<const MinuteRecord> stream) {
    cfg.validate();
    if (stream.size() <= cfg.N) {
        throw Error("run", "stream has " + std::to_string(stream.size()) + " minutes, need more than N=" +
                               std::to_string(cfg.N));
    }
    auto state = ppaw_init(cfg, bootstrap_rows(stream, cfg.N));
    std::vector<StepOutcome> out;
    out.reserve(stream.size() - cfg.N);
    for (std::size_t i = cfg.N; i < stream.size(); ++i) {
        const auto& rec = stream[i];
        if (!rec.bpm) throw Error("run", "minute " + std::to_string(rec.minute_index) + " has no heart rate");
        const double bpm = *rec.bpm;
        out.push_back(ppaw_step(state, rec, [bpm](std::int64_t) { return bpm; }));
    }
    return out;
}

void write_trace_csv(std::ostream& out, std::span<const BootstrapMinute> bootstrap,
                     std::span<const StepOutcome> steps) {
    std::string buf(kTraceHeader);
    buf.push_back('\n');
    for (const auto& b : bootstrap) {
        detail::append_int(buf, b.minute_index);
        buf.append(",,,1,");
        detail::append_double(buf, b.bpm);
        buf.append(",0,0\n");
    }
    for (const auto& s : steps) {
        detail::append_int(buf, s.minute_index);
        buf.push_back(',');
        detail::append_double(buf, s.predicted_bpm);
        buf.push_back(',');
        detail::append_double(buf, s.variance);
        buf.append(s.queried ? ",1," : ",0,");
        if (s.true_bpm) detail::append_double(buf, *s.true_bpm);
        buf.push_back(',');
        detail::append_int(buf, s.retrained_on_error);
        buf.push_back(',');
        detail::append_int(buf, s.retrained_on_ttl);
        buf.push_back('\n');
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed");
}

std::vector<TraceRow> parse_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || (line != kTraceHeader && line != std::string(kTraceHeader) + "\r")) {
        throw ParseError(1, "bad trace header");
    }
    auto opt_double = [](std::string_view f, std::size_t ln) -> std::optional<double> {
        if (f.empty()) return std::nullopt;
        auto v = detail::parse_double(f);
        if (!v || !std::isfinite(*v)) throw ParseError(ln, "bad number '" + std::string(f) + "'");
        return v;
    };
    auto int_of = [](std::string_view f, std::size_t ln) {
        auto v = detail::parse_int(f);
        if (!v) throw ParseError(ln, "bad integer '" + std::string(f) + "'");
        return *v;
    };
    std::vector<std::string_view> fields;
    std::vector<TraceRow> rows;
    std::size_t ln = 1;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty() || line == "\r") continue;
        detail::split_csv(line, fields);
        if (fields.size() != 7) throw ParseError(ln, "expected 7 fields, got " + std::to_string(fields.size()));
        TraceRow r;
        r.minute_index = int_of(fields[0], ln);
        r.predicted_bpm = opt_double(fields[1], ln);
        r.variance = opt_double(fields[2], ln);
        const auto q = int_of(fields[3], ln);
        if (q != 0 && q != 1) throw ParseError(ln, "queried must be 0 or 1");
        r.queried = q == 1;
        r.true_bpm = opt_double(fields[4], ln);
        r.retrained_on_error = static_cast<int>(int_of(fields[5], ln));
        r.retrained_on_ttl = static_cast<int>(int_of(fields[6], ln));
        rows.push_back(r);
    }
    return rows;
}

}  // namespace accelhr
